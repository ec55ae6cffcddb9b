#include "floc/sbfl.hpp"

#include "floc/csv.hpp"
#include "floc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace floc {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

FormulaId parse_formula(const std::string& name, double dstar_exponent) {
    FormulaId id;
    id.dstar_exponent = dstar_exponent;
    if (name == "ochiai") {
        id.name = Formula::Ochiai;
    } else if (name == "barinel") {
        id.name = Formula::Barinel;
    } else if (name == "tarantula") {
        id.name = Formula::Tarantula;
    } else if (name == "dstar") {
        id.name = Formula::DStar;
    } else {
        throw ValidationError("unknown formula: " + name);
    }
    if (id.dstar_exponent <= 0) {
        throw ValidationError("dstar exponent must be positive");
    }
    return id;
}

std::string formula_name(Formula formula) {
    switch (formula) {
        case Formula::Ochiai: return "ochiai";
        case Formula::Barinel: return "barinel";
        case Formula::Tarantula: return "tarantula";
        case Formula::DStar: return "dstar";
    }
    return "?";
}

const std::vector<Formula>& all_formulas() {
    static const std::vector<Formula> formulas = {
        Formula::Ochiai, Formula::Barinel, Formula::Tarantula, Formula::DStar};
    return formulas;
}

double score(const SpectrumCounts& c, const FormulaId& formula) {
    if (c.e_f < 0 || c.e_s < 0 || c.n_f < 0 || c.n_s < 0) {
        throw ValidationError("negative spectrum count");
    }
    const double ef = c.e_f;
    const double es = c.e_s;
    const double nf = c.n_f;
    const double ns = c.n_s;
    if (c.e_f == 0) return 0.0;

    switch (formula.name) {
        case Formula::Ochiai:
            // (ef+nf)(ef+es) >= ef^2 > 0 here.
            return ef / std::sqrt((ef + nf) * (ef + es));
        case Formula::Barinel:
            return 1.0 - es / (es + ef);
        case Formula::Tarantula: {
            const double flaky_term = ef / (ef + nf);
            const double stable_term = c.e_s == 0 ? 0.0 : es / (es + ns);
            return flaky_term / (flaky_term + stable_term);
        }
        case Formula::DStar: {
            const double denom = es * nf;
            if (denom == 0.0) return kInf;
            return std::pow(ef, formula.dstar_exponent) / denom;
        }
    }
    throw ValidationError("unknown formula");
}

const RankedEntry& Ranking::at(const std::string& class_id) const {
    for (const auto& entry : entries) {
        if (entry.class_id == class_id) return entry;
    }
    throw ValidationError("unknown class in ranking: " + class_id);
}

bool Ranking::contains(const std::string& class_id) const {
    return std::any_of(entries.begin(), entries.end(),
                       [&](const RankedEntry& e) { return e.class_id == class_id; });
}

Ranking rank_classes(const std::map<std::string, double>& scores) {
    if (scores.empty()) throw ValidationError("cannot rank an empty score map");
    std::vector<RankedEntry> entries;
    entries.reserve(scores.size());
    for (const auto& [id, value] : scores) {
        if (std::isnan(value)) {
            throw ValidationError("non-finite suspiciousness for class " + id);
        }
        entries.push_back(RankedEntry{id, value, 0, 0, 1, 0.0});
    }
    // Score descending; the map already yields class_id order for ties.
    std::stable_sort(entries.begin(), entries.end(),
                     [](const RankedEntry& a, const RankedEntry& b) { return a.score > b.score; });

    std::size_t group_start = 0;
    while (group_start < entries.size()) {
        std::size_t group_end = group_start;
        while (group_end + 1 < entries.size() &&
               entries[group_end + 1].score == entries[group_start].score) {
            ++group_end;
        }
        const int best = static_cast<int>(group_start) + 1;
        const int worst = static_cast<int>(group_end) + 1;
        for (std::size_t i = group_start; i <= group_end; ++i) {
            entries[i].rank = worst;
            entries[i].best_rank = best;
            entries[i].tie_group_size = worst - best + 1;
        }
        group_start = group_end + 1;
    }

    Ranking ranking;
    ranking.entries = std::move(entries);
    return ranking;
}

Ranking localise(const CoverageMatrix& matrix, const FormulaId& formula) {
    matrix.validate();
    if (matrix.flaky_total() == 0 || matrix.stable_total() == 0) {
        throw ValidationError("localisation needs at least one flaky and one stable test");
    }
    std::map<std::string, double> scores;
    for (const auto& [class_id, counts] : spectrum_counts(matrix)) {
        scores.emplace(class_id, score(counts, formula));
    }
    return rank_classes(scores);
}

void write_ranking(const Ranking& ranking, std::ostream& out, bool with_votes) {
    out << "class,score,rank,best_rank,tie_group_size";
    if (with_votes) out << ",votes";
    out << '\n';
    for (const auto& e : ranking.entries) {
        out << e.class_id << ',' << csv::format_double(e.score) << ',' << e.rank << ','
            << e.best_rank << ',' << e.tie_group_size;
        if (with_votes) out << ',' << csv::format_double(e.votes);
        out << '\n';
    }
}

Ranking read_ranking(const std::filesystem::path& file) {
    auto lines = csv::read_lines(file);
    while (!lines.empty() && csv::trim(lines.back()).empty()) lines.pop_back();
    if (lines.empty()) throw ParseError(file.string() + ": empty ranking file");
    auto header = csv::split_line(lines.front());
    bool with_votes = header.size() == 6 && csv::trim(header[5]) == "votes";
    if (header.size() < 5 || csv::trim(header[0]) != "class") {
        throw ParseError(file.string() + ": bad ranking header");
    }
    Ranking ranking;
    for (std::size_t row = 1; row < lines.size(); ++row) {
        const std::string where = file.string() + ":" + std::to_string(row + 1);
        auto cells = csv::split_line(lines[row]);
        if (cells.size() != header.size()) throw ParseError(where + ": ragged ranking row");
        RankedEntry entry;
        entry.class_id = std::string(csv::trim(cells[0]));
        entry.score = csv::parse_double(cells[1], where);
        entry.rank = static_cast<int>(csv::parse_int(cells[2], where));
        entry.best_rank = static_cast<int>(csv::parse_int(cells[3], where));
        entry.tie_group_size = static_cast<int>(csv::parse_int(cells[4], where));
        if (with_votes) entry.votes = csv::parse_double(cells[5], where);
        ranking.entries.push_back(std::move(entry));
    }
    return ranking;
}

}  // namespace floc
