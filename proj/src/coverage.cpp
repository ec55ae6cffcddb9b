#include "floc/coverage.hpp"

#include "floc/csv.hpp"
#include "floc/errors.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace floc {

namespace {

void require_distinct(const std::vector<std::string>& ids, const char* what) {
    std::unordered_set<std::string_view> seen;
    for (const auto& id : ids) {
        if (!seen.insert(id).second) {
            throw ValidationError(std::string("duplicate ") + what + " id: " + id);
        }
    }
}

}  // namespace

int CoverageMatrix::flaky_total() const {
    return static_cast<int>(std::count(outcome.begin(), outcome.end(), Outcome::Flaky));
}

int CoverageMatrix::stable_total() const {
    return static_cast<int>(outcome.size()) - flaky_total();
}

void CoverageMatrix::validate() const {
    require_distinct(test_ids, "test");
    require_distinct(class_ids, "class");
    if (outcome.size() != test_ids.size()) {
        throw ValidationError("outcome count does not match test count");
    }
    if (activity.size() != test_ids.size()) {
        throw ValidationError("activity row count does not match test count");
    }
    for (const auto& row : activity) {
        if (row.size() != class_ids.size()) {
            throw ValidationError("activity row width does not match class count");
        }
    }
}

CoverageMatrix parse_coverage(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw ParseError("cannot open coverage file: " + file.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_coverage_text(buf.str(), file.string());
}

CoverageMatrix parse_coverage_text(const std::string& text, const std::string& source_name) {
    std::vector<std::string> lines;
    {
        std::istringstream in(text);
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            lines.push_back(line);
        }
    }
    while (!lines.empty() && csv::trim(lines.back()).empty()) lines.pop_back();
    if (lines.empty()) throw ParseError(source_name + ": empty coverage file");

    auto header = csv::split_line(lines.front());
    if (header.size() < 2 || csv::trim(header[0]) != "test" || csv::trim(header[1]) != "outcome") {
        throw ParseError(source_name + ": coverage header must start with 'test,outcome'");
    }

    CoverageMatrix matrix;
    for (std::size_t i = 2; i < header.size(); ++i) {
        matrix.class_ids.emplace_back(csv::trim(header[i]));
    }

    for (std::size_t row = 1; row < lines.size(); ++row) {
        const std::string where = source_name + ":" + std::to_string(row + 1);
        auto cells = csv::split_line(lines[row]);
        if (cells.size() != header.size()) {
            throw ParseError(where + ": ragged row, expected " + std::to_string(header.size()) +
                             " cells, got " + std::to_string(cells.size()));
        }
        matrix.test_ids.emplace_back(csv::trim(cells[0]));
        auto label = csv::trim(cells[1]);
        if (label == "flaky") {
            matrix.outcome.push_back(Outcome::Flaky);
        } else if (label == "stable") {
            matrix.outcome.push_back(Outcome::Stable);
        } else {
            throw ParseError(where + ": unknown outcome label '" + std::string(label) + "'");
        }
        std::vector<std::uint8_t> bits;
        bits.reserve(cells.size() - 2);
        for (std::size_t i = 2; i < cells.size(); ++i) {
            auto cell = csv::trim(cells[i]);
            if (cell == "0") {
                bits.push_back(0);
            } else if (cell == "1") {
                bits.push_back(1);
            } else {
                throw ParseError(where + ": malformed cell '" + std::string(cell) +
                                 "', expected 0 or 1");
            }
        }
        matrix.activity.push_back(std::move(bits));
    }

    matrix.validate();
    return matrix;
}

void write_coverage(const CoverageMatrix& matrix, std::ostream& out) {
    out << "test,outcome";
    for (const auto& c : matrix.class_ids) out << ',' << c;
    out << '\n';
    for (std::size_t t = 0; t < matrix.test_count(); ++t) {
        out << matrix.test_ids[t] << ','
            << (matrix.outcome[t] == Outcome::Flaky ? "flaky" : "stable");
        for (std::uint8_t bit : matrix.activity[t]) out << ',' << (bit ? '1' : '0');
        out << '\n';
    }
}

std::string coverage_to_csv(const CoverageMatrix& matrix) {
    std::ostringstream out;
    write_coverage(matrix, out);
    return out.str();
}

std::map<std::string, SpectrumCounts> spectrum_counts(const CoverageMatrix& matrix) {
    const int flaky = matrix.flaky_total();
    const int stable = matrix.stable_total();
    std::map<std::string, SpectrumCounts> counts;
    for (std::size_t c = 0; c < matrix.class_count(); ++c) {
        SpectrumCounts sc;
        for (std::size_t t = 0; t < matrix.test_count(); ++t) {
            if (!matrix.activity[t][c]) continue;
            if (matrix.outcome[t] == Outcome::Flaky) {
                ++sc.e_f;
            } else {
                ++sc.e_s;
            }
        }
        sc.n_f = flaky - sc.e_f;
        sc.n_s = stable - sc.e_s;
        counts.emplace(matrix.class_ids[c], sc);
    }
    return counts;
}

std::set<std::string> covered_by_flaky(const CoverageMatrix& matrix) {
    std::set<std::string> covered;
    for (std::size_t c = 0; c < matrix.class_count(); ++c) {
        for (std::size_t t = 0; t < matrix.test_count(); ++t) {
            if (matrix.activity[t][c] && matrix.outcome[t] == Outcome::Flaky) {
                covered.insert(matrix.class_ids[c]);
                break;
            }
        }
    }
    return covered;
}

}  // namespace floc
