#pragma once

#include "floc/coverage.hpp"
#include "floc/sbfl.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

namespace floc {

/// Closed category label set (plus `ambiguous` for the unlabeled).
const std::set<std::string>& known_categories();

struct CommitTruth {
    std::string commit_id;
    std::vector<std::string> flaky_tests;
    std::vector<std::string> flaky_classes;  // at least one
    std::vector<std::string> categories;     // subset of known_categories()

    void validate() const;
};

/// Keyed by commit id.
using GroundTruth = std::map<std::string, CommitTruth>;

/// JSON-lines manifest:
/// {"commit_id":..,"flaky_tests":[..],"flaky_classes":[..],"categories":[..]}
GroundTruth read_ground_truth(const std::filesystem::path& file);
void write_ground_truth(const GroundTruth& truth, std::ostream& out);

/// Number of commits whose best (minimum) true-class rank is <= n.
/// Throws when a truth class is missing from its ranking.
int acc_at_n(const std::map<std::string, Ranking>& rankings, const GroundTruth& truth, int n);

/// Minimum rank among the commit's true classes (max tie-breaker ranks).
int best_rank(const Ranking& ranking, const std::vector<std::string>& flaky_classes);

/// Wasted effort before reaching the flaky class:
///   |{x != x*: susp(x) >= susp(x*)}| + |{x != x*: susp(x) = susp(x*)}|/2 + 1/2
/// which equals (rank - 1) + (tie_group_size - 1)/2 + 1/2 under the max
/// tie-breaker. Minimum value 0.5.
double wef(const std::map<std::string, double>& scores, const std::string& flaky_class);

/// Same quantity computed from ranking fields.
double wef_from_rank(int rank, int tie_group_size);

/// Multi-flaky commits report the minimum over their true classes.
double wef_min(const std::map<std::string, double>& scores,
               const std::vector<std::string>& flaky_classes);

/// 100 * (wef + 1) / |classes covered by flaky tests|, clamped to 100 with a
/// warning when the culprit itself escaped flaky coverage. covered must be >= 1.
double r_wef(double wef_value, int covered, std::vector<std::string>* warnings = nullptr);

struct DduResult {
    double density = 0.0;  // 1 - |1 - 2*rho|
    double diversity = 0.0;
    double uniqueness = 0.0;
    double ddu = 0.0;
};

/// Test-suite diagnosability: density' x diversity x uniqueness.
DduResult ddu(const CoverageMatrix& matrix);

struct CommitEvaluation {
    std::string commit_id;
    int best_rank = 0;
    double wef = 0.0;
    std::optional<double> r_wef;
};

struct MetricSummary {
    int commits = 0;
    int acc1 = 0;
    int acc3 = 0;
    int acc5 = 0;
    int acc10 = 0;
    double wef_mean = 0.0;
    double wef_median = 0.0;
    std::optional<double> rwef_mean;
    std::optional<double> rwef_median;
};

struct DduRow {
    std::string commit_id;
    DduResult result;
};

struct EvaluationReport {
    std::vector<CommitEvaluation> per_commit;
    MetricSummary total;
    std::map<std::string, MetricSummary> per_category;  // present when labels exist
    std::vector<DduRow> ddu_rows;                       // present when matrices are given
};

/// Builds per-commit rows and aggregates. When a coverage matrix is supplied
/// for a commit, R_wef and a DDU row are included. Commits without category
/// labels fall into `ambiguous` with a warning; multi-label commits count in
/// every one of their categories and once in the total.
EvaluationReport build_report(const std::map<std::string, Ranking>& rankings,
                              const GroundTruth& truth,
                              const std::map<std::string, CoverageMatrix>* matrices = nullptr,
                              std::vector<std::string>* warnings = nullptr);

void write_report_summary_csv(const EvaluationReport& report, std::ostream& out);
void write_report_per_commit_csv(const EvaluationReport& report, std::ostream& out);
void write_report_ddu_csv(const EvaluationReport& report, std::ostream& out);
void write_report_text(const EvaluationReport& report, std::ostream& out);

struct OverlapReport {
    std::vector<std::string> labels;
    std::map<std::string, std::set<std::string>> hits;  // label -> commits with culprit in top k
    std::map<std::string, std::map<std::string, int>> pairwise;  // intersection sizes
    int overall = 0;  // |intersection over all labels|
};

/// Which commits each ranking set places a culprit in the top k for, plus
/// all pairwise and overall intersection sizes.
OverlapReport overlap_report(
    const std::map<std::string, std::map<std::string, Ranking>>& rankings_by_label,
    const GroundTruth& truth, int k);

void write_overlap_csv(const OverlapReport& report, std::ostream& out);

}  // namespace floc
