#pragma once

#include "floc/coverage.hpp"
#include "floc/evaluate.hpp"
#include "floc/evolve.hpp"
#include "floc/features.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace floc {

/// One commit loaded from a dataset directory.
struct DatasetCommit {
    std::string commit_id;
    CoverageMatrix matrix;
    std::map<MetricFamily, MetricTable> tables;  // whichever CSVs were present
    CommitTruth truth;
};

struct Dataset {
    std::vector<DatasetCommit> commits;
};

/// Loads dir/truth.jsonl plus dir/commits/<id>/coverage.csv and any
/// {change,size,flakiness}.csv alongside it. Every truth commit must have a
/// coverage file.
Dataset load_dataset(const std::filesystem::path& dir);

/// Normalized per-commit feature matrices for one feature set
/// (sbfl, sbfl+flakiness, sbfl+change, sbfl+size).
std::vector<TrainingCommit> to_training(const Dataset& dataset, const std::string& feature_set,
                                        double dstar_exponent = 2.0);

}  // namespace floc
