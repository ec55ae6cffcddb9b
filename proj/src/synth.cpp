#include "floc/synth.hpp"

#include "floc/csv.hpp"
#include "floc/errors.hpp"
#include "floc/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace floc {

namespace {

std::string padded(const std::string& prefix, int index, int width = 4) {
    std::string digits = std::to_string(index);
    while (static_cast<int>(digits.size()) < width) digits.insert(digits.begin(), '0');
    return prefix + digits;
}

// Culprit elevation offsets per signal metric; baselines draw below these,
// so signal 1.0 makes the culprit a strict argmax of that column.
constexpr double kChangesBase = 50.0;
constexpr double kChangesBoost = 60.0;
constexpr double kLocBase = 500.0;
constexpr double kLocBoost = 600.0;

const char* kCategoryCycle[] = {"concurrency", "async-wait", "time",  "network",
                                "unordered-collections", "io", "random"};

}  // namespace

void SynthSpec::validate() const {
    if (commits < 1 || tests_per_commit < 1 || classes_per_commit < 1) {
        throw ValidationError("synth counts must be >= 1");
    }
    auto probability = [](double p, const char* what) {
        if (p < 0.0 || p > 1.0) {
            throw ValidationError(std::string(what) + " must be in [0,1]");
        }
    };
    probability(flaky_fraction, "flaky_fraction");
    probability(coverage_bias, "coverage_bias");
    probability(baseline_density, "baseline_density");
    probability(metric_signal, "metric_signal");
    if (baseline_density + coverage_bias > 1.0) {
        throw ValidationError("infeasible spec: baseline_density + coverage_bias > 1");
    }
    for (const auto& metric : signal_metrics) {
        if (metric != "changes" && metric != "loc") {
            throw ValidationError("signal metric must be 'changes' or 'loc', got '" + metric +
                                  "'");
        }
    }
    if (tests_per_commit < 2) {
        throw ValidationError("need at least 2 tests per commit for both outcome labels");
    }
}

SynthDataset generate(const SynthSpec& spec) {
    spec.validate();
    const bool signal_changes =
        std::find(spec.signal_metrics.begin(), spec.signal_metrics.end(), "changes") !=
        spec.signal_metrics.end();
    const bool signal_loc = std::find(spec.signal_metrics.begin(), spec.signal_metrics.end(),
                                      "loc") != spec.signal_metrics.end();

    SynthDataset dataset;
    dataset.commits.reserve(static_cast<std::size_t>(spec.commits));
    for (int ci = 0; ci < spec.commits; ++ci) {
        Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(ci)));
        SynthCommit commit;
        commit.commit_id = padded(spec.commit_prefix, ci);

        const int tests = spec.tests_per_commit;
        const int classes = spec.classes_per_commit;
        int flaky = static_cast<int>(std::lround(spec.flaky_fraction * tests));
        flaky = std::clamp(flaky, 1, tests - 1);
        const int culprit = rng.bounded(classes);

        CoverageMatrix& matrix = commit.matrix;
        for (int t = 0; t < tests; ++t) {
            matrix.test_ids.push_back(padded("T", t));
            matrix.outcome.push_back(t < flaky ? Outcome::Flaky : Outcome::Stable);
        }
        for (int c = 0; c < classes; ++c) matrix.class_ids.push_back(padded("C", c));
        for (int t = 0; t < tests; ++t) {
            std::vector<std::uint8_t> row(static_cast<std::size_t>(classes));
            for (int c = 0; c < classes; ++c) {
                double p = spec.baseline_density;
                if (c == culprit && t < flaky) p += spec.coverage_bias;
                row[static_cast<std::size_t>(c)] = rng.uniform01() < p ? 1 : 0;
            }
            matrix.activity.push_back(std::move(row));
        }
        matrix.validate();

        commit.change.family = MetricFamily::Change;
        commit.change.columns = family_columns(MetricFamily::Change);
        commit.size.family = MetricFamily::Size;
        commit.size.columns = family_columns(MetricFamily::Size);
        commit.flakiness.family = MetricFamily::Flakiness;
        commit.flakiness.columns = family_columns(MetricFamily::Flakiness);
        for (int c = 0; c < classes; ++c) {
            const std::string class_id = matrix.class_ids[static_cast<std::size_t>(c)];
            double changes = rng.bounded(static_cast<int>(kChangesBase));
            double age = rng.uniform01() * 365.0;
            double developers = rng.bounded(10);
            double loc = rng.bounded(static_cast<int>(kLocBase));
            double cc = 1 + rng.bounded(30);
            double doi = 1 + rng.bounded(5);
            if (c == culprit && spec.metric_signal > 0.0) {
                if (signal_changes) changes += spec.metric_signal * kChangesBoost;
                if (signal_loc) loc += spec.metric_signal * kLocBoost;
            }
            commit.change.values[class_id] = {changes, age, developers};
            commit.size.values[class_id] = {loc, cc, doi};
            std::vector<double> ops;
            for (std::size_t i = 0; i < commit.flakiness.columns.size(); ++i) {
                ops.push_back(rng.bounded(5));
            }
            commit.flakiness.values[class_id] = std::move(ops);
        }

        commit.truth.commit_id = commit.commit_id;
        for (int t = 0; t < flaky; ++t) {
            commit.truth.flaky_tests.push_back(matrix.test_ids[static_cast<std::size_t>(t)]);
        }
        commit.truth.flaky_classes.push_back(matrix.class_ids[static_cast<std::size_t>(culprit)]);
        commit.truth.categories.push_back(
            kCategoryCycle[static_cast<std::size_t>(ci) % std::size(kCategoryCycle)]);

        dataset.commits.push_back(std::move(commit));
    }
    return dataset;
}

void write_dataset(const SynthDataset& dataset, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir / "commits");
    std::ostringstream truth_out;
    GroundTruth truth;
    for (const auto& commit : dataset.commits) {
        truth.emplace(commit.truth.commit_id, commit.truth);
        const auto commit_dir = dir / "commits" / commit.commit_id;
        std::filesystem::create_directories(commit_dir);
        csv::write_file(commit_dir / "coverage.csv", coverage_to_csv(commit.matrix));
        for (const MetricTable* table : {&commit.change, &commit.size, &commit.flakiness}) {
            std::ostringstream out;
            write_metric_table(*table, out);
            csv::write_file(commit_dir / (family_name(table->family) + ".csv"), out.str());
        }
    }
    write_ground_truth(truth, truth_out);
    csv::write_file(dir / "truth.jsonl", truth_out.str());
}

}  // namespace floc
