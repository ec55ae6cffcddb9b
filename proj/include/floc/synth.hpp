#pragma once

#include "floc/coverage.hpp"
#include "floc/evaluate.hpp"
#include "floc/features.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace floc {

/// Parameters for generating planted-culprit localisation problems.
/// coverage_bias is the extra probability (over the baseline density) that
/// a flaky test covers the culprit; metric_signal elevates the culprit's
/// signal_metrics columns, reaching a guaranteed argmax at 1.0.
struct SynthSpec {
    int commits = 20;
    int tests_per_commit = 40;
    int classes_per_commit = 60;
    double flaky_fraction = 0.2;
    double coverage_bias = 0.6;
    double baseline_density = 0.2;
    double metric_signal = 0.0;
    std::vector<std::string> signal_metrics = {"changes", "loc"};
    std::uint64_t seed = 0;
    std::string commit_prefix = "commit";

    void validate() const;  // rejects infeasible probability combinations
};

struct SynthCommit {
    std::string commit_id;
    CoverageMatrix matrix;
    MetricTable change;
    MetricTable size;
    MetricTable flakiness;
    CommitTruth truth;
};

struct SynthDataset {
    std::vector<SynthCommit> commits;
};

/// Deterministic for a fixed seed; per-commit child seeds keep commits
/// independent of generation order.
SynthDataset generate(const SynthSpec& spec);

/// Emits the on-disk dataset layout:
///   dir/truth.jsonl
///   dir/commits/<id>/{coverage.csv,change.csv,size.csv,flakiness.csv}
void write_dataset(const SynthDataset& dataset, const std::filesystem::path& dir);

}  // namespace floc
