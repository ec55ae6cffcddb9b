#include "floc/evaluate.hpp"

#include "floc/csv.hpp"
#include "floc/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace floc {

namespace {

using nlohmann::json;

double median_of(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return (values[(n - 1) / 2] + values[n / 2]) / 2.0;
}

MetricSummary summarize(const std::vector<const CommitEvaluation*>& rows) {
    MetricSummary summary;
    summary.commits = static_cast<int>(rows.size());
    std::vector<double> wefs;
    std::vector<double> rwefs;
    bool all_rwef = !rows.empty();
    for (const CommitEvaluation* row : rows) {
        if (row->best_rank <= 1) ++summary.acc1;
        if (row->best_rank <= 3) ++summary.acc3;
        if (row->best_rank <= 5) ++summary.acc5;
        if (row->best_rank <= 10) ++summary.acc10;
        wefs.push_back(row->wef);
        if (row->r_wef) {
            rwefs.push_back(*row->r_wef);
        } else {
            all_rwef = false;
        }
    }
    if (!wefs.empty()) {
        summary.wef_mean =
            std::accumulate(wefs.begin(), wefs.end(), 0.0) / static_cast<double>(wefs.size());
        summary.wef_median = median_of(wefs);
    }
    if (all_rwef && !rwefs.empty()) {
        summary.rwef_mean =
            std::accumulate(rwefs.begin(), rwefs.end(), 0.0) / static_cast<double>(rwefs.size());
        summary.rwef_median = median_of(rwefs);
    }
    return summary;
}

std::string opt_cell(const std::optional<double>& value) {
    return value ? csv::format_double(*value) : "";
}

}  // namespace

const std::set<std::string>& known_categories() {
    static const std::set<std::string> categories = {
        "concurrency", "async-wait", "time",   "network",
        "unordered-collections", "io", "random", "ambiguous"};
    return categories;
}

void CommitTruth::validate() const {
    if (commit_id.empty()) throw ValidationError("commit truth without commit_id");
    if (flaky_classes.empty()) {
        throw ValidationError("commit " + commit_id + " has no flaky classes");
    }
    for (const auto& category : categories) {
        if (!known_categories().count(category)) {
            throw ValidationError("commit " + commit_id + " has unknown category '" + category +
                                  "'");
        }
    }
}

GroundTruth read_ground_truth(const std::filesystem::path& file) {
    GroundTruth truth;
    std::size_t line_no = 0;
    for (const auto& line : csv::read_lines(file)) {
        ++line_no;
        if (csv::trim(line).empty()) continue;
        const std::string where = file.string() + ":" + std::to_string(line_no);
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError(where + ": bad truth json: " + e.what());
        }
        CommitTruth entry;
        try {
            entry.commit_id = obj.at("commit_id").get<std::string>();
            entry.flaky_tests = obj.value("flaky_tests", std::vector<std::string>{});
            entry.flaky_classes = obj.at("flaky_classes").get<std::vector<std::string>>();
            entry.categories = obj.value("categories", std::vector<std::string>{});
        } catch (const json::exception& e) {
            throw ParseError(where + ": bad truth record: " + e.what());
        }
        entry.validate();
        if (truth.count(entry.commit_id)) {
            throw ValidationError(where + ": duplicate commit " + entry.commit_id);
        }
        truth.emplace(entry.commit_id, std::move(entry));
    }
    return truth;
}

void write_ground_truth(const GroundTruth& truth, std::ostream& out) {
    for (const auto& [commit_id, entry] : truth) {
        json obj{{"commit_id", commit_id},
                 {"flaky_tests", entry.flaky_tests},
                 {"flaky_classes", entry.flaky_classes},
                 {"categories", entry.categories}};
        out << obj.dump() << '\n';
    }
}

int best_rank(const Ranking& ranking, const std::vector<std::string>& flaky_classes) {
    if (flaky_classes.empty()) throw ValidationError("no flaky classes given");
    int best = std::numeric_limits<int>::max();
    for (const auto& class_id : flaky_classes) {
        best = std::min(best, ranking.at(class_id).rank);
    }
    return best;
}

int acc_at_n(const std::map<std::string, Ranking>& rankings, const GroundTruth& truth, int n) {
    int count = 0;
    for (const auto& [commit_id, ranking] : rankings) {
        auto it = truth.find(commit_id);
        if (it == truth.end()) {
            throw ValidationError("no ground truth for commit " + commit_id);
        }
        if (best_rank(ranking, it->second.flaky_classes) <= n) ++count;
    }
    return count;
}

double wef(const std::map<std::string, double>& scores, const std::string& flaky_class) {
    auto it = scores.find(flaky_class);
    if (it == scores.end()) throw ValidationError("unknown class: " + flaky_class);
    const double target = it->second;
    int at_least = 0;
    int equal = 0;
    for (const auto& [class_id, value] : scores) {
        if (class_id == flaky_class) continue;
        if (value >= target) ++at_least;
        if (value == target) ++equal;
    }
    return static_cast<double>(at_least) + static_cast<double>(equal) / 2.0 + 0.5;
}

double wef_from_rank(int rank, int tie_group_size) {
    return static_cast<double>(rank - 1) + static_cast<double>(tie_group_size - 1) / 2.0 + 0.5;
}

double wef_min(const std::map<std::string, double>& scores,
               const std::vector<std::string>& flaky_classes) {
    if (flaky_classes.empty()) throw ValidationError("no flaky classes given");
    double best = std::numeric_limits<double>::infinity();
    for (const auto& class_id : flaky_classes) best = std::min(best, wef(scores, class_id));
    return best;
}

double r_wef(double wef_value, int covered, std::vector<std::string>* warnings) {
    if (covered < 1) throw ValidationError("R_wef needs at least one class covered by flaky tests");
    double value = 100.0 * (wef_value + 1.0) / static_cast<double>(covered);
    if (value > 100.0) {
        if (warnings) {
            warnings->push_back("R_wef " + csv::format_double(value) +
                                " exceeds 100 (culprit not covered by flaky tests); clamped");
        }
        value = 100.0;
    }
    return value;
}

DduResult ddu(const CoverageMatrix& matrix) {
    matrix.validate();
    const std::size_t tests = matrix.test_count();
    const std::size_t classes = matrix.class_count();
    if (tests == 0 || classes == 0) throw ValidationError("DDU needs a non-empty matrix");

    std::size_t active = 0;
    for (const auto& row : matrix.activity) {
        for (std::uint8_t bit : row) active += bit;
    }
    const double rho =
        static_cast<double>(active) / (static_cast<double>(tests) * static_cast<double>(classes));

    DduResult result;
    result.density = 1.0 - std::abs(1.0 - 2.0 * rho);

    if (tests == 1) {
        result.diversity = 1.0;
    } else {
        std::map<std::vector<std::uint8_t>, std::size_t> row_groups;
        for (const auto& row : matrix.activity) ++row_groups[row];
        double same_pairs = 0.0;
        for (const auto& [row, count] : row_groups) {
            same_pairs += static_cast<double>(count) * static_cast<double>(count - 1);
        }
        result.diversity = 1.0 - same_pairs / (static_cast<double>(tests) *
                                               static_cast<double>(tests - 1));
    }

    std::set<std::vector<std::uint8_t>> distinct_columns;
    for (std::size_t c = 0; c < classes; ++c) {
        std::vector<std::uint8_t> column(tests);
        for (std::size_t t = 0; t < tests; ++t) column[t] = matrix.activity[t][c];
        distinct_columns.insert(std::move(column));
    }
    result.uniqueness =
        static_cast<double>(distinct_columns.size()) / static_cast<double>(classes);

    result.ddu = result.density * result.diversity * result.uniqueness;
    return result;
}

EvaluationReport build_report(const std::map<std::string, Ranking>& rankings,
                              const GroundTruth& truth,
                              const std::map<std::string, CoverageMatrix>* matrices,
                              std::vector<std::string>* warnings) {
    EvaluationReport report;
    std::map<std::string, std::vector<const CommitEvaluation*>> by_category;

    for (const auto& [commit_id, ranking] : rankings) {
        auto it = truth.find(commit_id);
        if (it == truth.end()) {
            throw ValidationError("no ground truth for commit " + commit_id);
        }
        const CommitTruth& entry = it->second;

        CommitEvaluation row;
        row.commit_id = commit_id;
        row.best_rank = best_rank(ranking, entry.flaky_classes);
        double best_wef = std::numeric_limits<double>::infinity();
        for (const auto& class_id : entry.flaky_classes) {
            const RankedEntry& ranked = ranking.at(class_id);
            best_wef = std::min(best_wef, wef_from_rank(ranked.rank, ranked.tie_group_size));
        }
        row.wef = best_wef;

        if (matrices) {
            auto mit = matrices->find(commit_id);
            if (mit != matrices->end()) {
                const int covered = static_cast<int>(covered_by_flaky(mit->second).size());
                if (covered >= 1) {
                    row.r_wef = r_wef(row.wef, covered, warnings);
                } else if (warnings) {
                    warnings->push_back("commit " + commit_id +
                                        ": no classes covered by flaky tests; R_wef skipped");
                }
                report.ddu_rows.push_back(DduRow{commit_id, ddu(mit->second)});
            }
        }
        report.per_commit.push_back(std::move(row));
    }

    std::vector<const CommitEvaluation*> all_rows;
    for (const auto& row : report.per_commit) all_rows.push_back(&row);
    report.total = summarize(all_rows);

    bool any_labels = false;
    for (const auto& row : report.per_commit) {
        const CommitTruth& entry = truth.at(row.commit_id);
        std::vector<std::string> categories = entry.categories;
        if (categories.empty()) {
            categories.push_back("ambiguous");
            if (warnings) {
                warnings->push_back("commit " + row.commit_id +
                                    " has no category label; counted as ambiguous");
            }
        } else {
            any_labels = true;
        }
        for (const auto& category : categories) by_category[category].push_back(&row);
    }
    if (any_labels) {
        for (const auto& [category, rows] : by_category) {
            report.per_category.emplace(category, summarize(rows));
        }
    }
    return report;
}

namespace {

void write_summary_row(std::ostream& out, const std::string& group,
                       const MetricSummary& summary) {
    out << group << ',' << summary.commits << ',' << summary.acc1 << ',' << summary.acc3 << ','
        << summary.acc5 << ',' << summary.acc10 << ',' << csv::format_double(summary.wef_mean)
        << ',' << csv::format_double(summary.wef_median) << ',' << opt_cell(summary.rwef_mean)
        << ',' << opt_cell(summary.rwef_median) << '\n';
}

}  // namespace

void write_report_summary_csv(const EvaluationReport& report, std::ostream& out) {
    out << "group,commits,acc1,acc3,acc5,acc10,wef_mean,wef_median,rwef_mean,rwef_median\n";
    write_summary_row(out, "total", report.total);
    for (const auto& [category, summary] : report.per_category) {
        write_summary_row(out, category, summary);
    }
}

void write_report_per_commit_csv(const EvaluationReport& report, std::ostream& out) {
    out << "commit,best_rank,wef,r_wef\n";
    for (const auto& row : report.per_commit) {
        out << row.commit_id << ',' << row.best_rank << ',' << csv::format_double(row.wef) << ','
            << opt_cell(row.r_wef) << '\n';
    }
}

void write_report_ddu_csv(const EvaluationReport& report, std::ostream& out) {
    out << "commit,density,diversity,uniqueness,ddu\n";
    for (const auto& row : report.ddu_rows) {
        out << row.commit_id << ',' << csv::format_double(row.result.density) << ','
            << csv::format_double(row.result.diversity) << ','
            << csv::format_double(row.result.uniqueness) << ','
            << csv::format_double(row.result.ddu) << '\n';
    }
}

void write_report_text(const EvaluationReport& report, std::ostream& out) {
    auto line = [&](const std::string& group, const MetricSummary& s) {
        std::ostringstream wef_cell;
        wef_cell << std::fixed << std::setprecision(2) << s.wef_mean;
        std::ostringstream wefm_cell;
        wefm_cell << std::fixed << std::setprecision(2) << s.wef_median;
        out << std::left << std::setw(24) << group << std::right << std::setw(8) << s.commits
            << std::setw(8) << s.acc1 << std::setw(8) << s.acc3 << std::setw(8) << s.acc5
            << std::setw(8) << s.acc10 << std::setw(12) << wef_cell.str() << std::setw(12)
            << wefm_cell.str();
        if (s.rwef_mean && s.rwef_median) {
            std::ostringstream r1;
            r1 << std::fixed << std::setprecision(1) << *s.rwef_mean;
            std::ostringstream r2;
            r2 << std::fixed << std::setprecision(1) << *s.rwef_median;
            out << std::setw(12) << r1.str() << std::setw(12) << r2.str();
        }
        out << '\n';
    };
    out << std::left << std::setw(24) << "group" << std::right << std::setw(8) << "commits"
        << std::setw(8) << "acc@1" << std::setw(8) << "acc@3" << std::setw(8) << "acc@5"
        << std::setw(8) << "acc@10" << std::setw(12) << "wef_mean" << std::setw(12) << "wef_med";
    if (report.total.rwef_mean) {
        out << std::setw(12) << "rwef_mean" << std::setw(12) << "rwef_med";
    }
    out << '\n';
    line("total", report.total);
    for (const auto& [category, summary] : report.per_category) line(category, summary);
    if (report.total.rwef_mean && *report.total.rwef_mean < 50.0) {
        out << "mean R_wef < 50: outperforms the inspect-everything-flaky-covered baseline\n";
    }
}

OverlapReport overlap_report(
    const std::map<std::string, std::map<std::string, Ranking>>& rankings_by_label,
    const GroundTruth& truth, int k) {
    if (rankings_by_label.size() < 2) {
        throw ValidationError("overlap report needs at least two ranking sets");
    }
    OverlapReport report;
    for (const auto& [label, rankings] : rankings_by_label) {
        report.labels.push_back(label);
        std::set<std::string> hits;
        for (const auto& [commit_id, ranking] : rankings) {
            auto it = truth.find(commit_id);
            if (it == truth.end()) {
                throw ValidationError("no ground truth for commit " + commit_id);
            }
            if (best_rank(ranking, it->second.flaky_classes) <= k) hits.insert(commit_id);
        }
        report.hits.emplace(label, std::move(hits));
    }

    for (const auto& a : report.labels) {
        for (const auto& b : report.labels) {
            const auto& ha = report.hits.at(a);
            const auto& hb = report.hits.at(b);
            std::vector<std::string> common;
            std::set_intersection(ha.begin(), ha.end(), hb.begin(), hb.end(),
                                  std::back_inserter(common));
            report.pairwise[a][b] = static_cast<int>(common.size());
        }
    }

    std::set<std::string> overall = report.hits.at(report.labels.front());
    for (const auto& label : report.labels) {
        const auto& hits = report.hits.at(label);
        std::set<std::string> next;
        std::set_intersection(overall.begin(), overall.end(), hits.begin(), hits.end(),
                              std::inserter(next, next.begin()));
        overall = std::move(next);
    }
    report.overall = static_cast<int>(overall.size());
    return report;
}

void write_overlap_csv(const OverlapReport& report, std::ostream& out) {
    out << "label,hits";
    for (const auto& label : report.labels) out << ",n_with_" << label;
    out << '\n';
    for (const auto& label : report.labels) {
        out << label << ',' << report.hits.at(label).size();
        for (const auto& other : report.labels) out << ',' << report.pairwise.at(label).at(other);
        out << '\n';
    }
    out << "overall," << report.overall;
    for (std::size_t i = 0; i < report.labels.size(); ++i) out << ',';
    out << '\n';
}

}  // namespace floc
