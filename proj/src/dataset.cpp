#include "floc/dataset.hpp"

#include "floc/errors.hpp"

#include <algorithm>

namespace floc {

Dataset load_dataset(const std::filesystem::path& dir) {
    const auto truth_file = dir / "truth.jsonl";
    if (!std::filesystem::exists(truth_file)) {
        throw ParseError("dataset is missing " + truth_file.string());
    }
    GroundTruth truth = read_ground_truth(truth_file);

    Dataset dataset;
    for (const auto& [commit_id, entry] : truth) {
        const auto commit_dir = dir / "commits" / commit_id;
        const auto coverage_file = commit_dir / "coverage.csv";
        if (!std::filesystem::exists(coverage_file)) {
            throw ParseError("dataset commit " + commit_id + " is missing " +
                             coverage_file.string());
        }
        DatasetCommit commit;
        commit.commit_id = commit_id;
        commit.matrix = parse_coverage(coverage_file);
        commit.truth = entry;
        for (MetricFamily family :
             {MetricFamily::Change, MetricFamily::Size, MetricFamily::Flakiness}) {
            const auto table_file = commit_dir / (family_name(family) + ".csv");
            if (std::filesystem::exists(table_file)) {
                commit.tables.emplace(family, ingest_metric_table(table_file, family));
            }
        }
        for (const auto& flaky : entry.flaky_classes) {
            if (std::find(commit.matrix.class_ids.begin(), commit.matrix.class_ids.end(),
                          flaky) == commit.matrix.class_ids.end()) {
                throw ValidationError("commit " + commit_id + ": flaky class " + flaky +
                                      " is not a matrix class");
            }
        }
        dataset.commits.push_back(std::move(commit));
    }
    return dataset;
}

std::vector<TrainingCommit> to_training(const Dataset& dataset, const std::string& feature_set,
                                        double dstar_exponent) {
    const auto families = feature_set_families(feature_set);
    std::vector<TrainingCommit> training;
    training.reserve(dataset.commits.size());
    for (const auto& commit : dataset.commits) {
        std::vector<const MetricTable*> tables;
        for (MetricFamily family : families) {
            auto it = commit.tables.find(family);
            if (it == commit.tables.end()) {
                throw ValidationError("commit " + commit.commit_id + " has no " +
                                      family_name(family) + " table required by feature set " +
                                      feature_set);
            }
            tables.push_back(&it->second);
        }
        TrainingCommit entry;
        entry.commit_id = commit.commit_id;
        entry.features = normalize(build_features(commit.matrix, tables, dstar_exponent));
        entry.flaky_classes = commit.truth.flaky_classes;
        training.push_back(std::move(entry));
    }
    return training;
}

}  // namespace floc
