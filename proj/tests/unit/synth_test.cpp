#include "floc/synth.hpp"

#include "floc/dataset.hpp"
#include "floc/errors.hpp"
#include "floc/sbfl.hpp"

#include <gtest/gtest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace floc;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;

    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("floc_synth_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string read_file(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

SynthSpec small_spec() {
    SynthSpec spec;
    spec.commits = 6;
    spec.tests_per_commit = 14;
    spec.classes_per_commit = 12;
    spec.seed = 99;
    return spec;
}

}  // namespace

TEST(Synth, ExtremeBiasCoversCulpritExactly) {
    SynthSpec spec = small_spec();
    spec.coverage_bias = 1.0;
    spec.baseline_density = 0.0;
    auto dataset = generate(spec);
    ASSERT_EQ(dataset.commits.size(), 6u);
    for (const auto& commit : dataset.commits) {
        ASSERT_EQ(commit.truth.flaky_classes.size(), 1u);
        const auto& culprit = commit.truth.flaky_classes.front();
        const auto counts = spectrum_counts(commit.matrix);
        const auto& culprit_counts = counts.at(culprit);
        EXPECT_EQ(culprit_counts.e_f, commit.matrix.flaky_total());
        EXPECT_EQ(culprit_counts.e_s, 0);
        for (const auto& [class_id, sc] : counts) {
            if (class_id != culprit) {
                EXPECT_EQ(sc.e_f, 0);
                EXPECT_EQ(sc.e_s, 0);
            }
        }
    }
}

TEST(Synth, OchiaiFindsCulpritUnderExtremeBias) {
    SynthSpec spec = small_spec();
    spec.coverage_bias = 1.0;
    spec.baseline_density = 0.0;
    for (const auto& commit : generate(spec).commits) {
        auto ranking = localise(commit.matrix, FormulaId{Formula::Ochiai, 2.0});
        EXPECT_EQ(ranking.at(commit.truth.flaky_classes.front()).best_rank, 1);
    }
}

TEST(Synth, FixedSeedEmitsByteIdenticalFiles) {
    TempDir first;
    TempDir second;
    SynthSpec spec = small_spec();
    spec.metric_signal = 0.5;
    write_dataset(generate(spec), first.path);
    write_dataset(generate(spec), second.path);

    std::size_t compared = 0;
    for (const auto& entry : fs::recursive_directory_iterator(first.path)) {
        if (!entry.is_regular_file()) continue;
        const auto rel = fs::relative(entry.path(), first.path);
        EXPECT_EQ(read_file(entry.path()), read_file(second.path / rel)) << rel;
        ++compared;
    }
    // truth + 4 files per commit
    EXPECT_EQ(compared, 1u + 4u * 6u);
}

TEST(Synth, GeneratedFilesRoundTripThroughParsers) {
    TempDir dir;
    SynthSpec spec = small_spec();
    spec.metric_signal = 1.0;
    write_dataset(generate(spec), dir.path);

    auto dataset = load_dataset(dir.path);
    ASSERT_EQ(dataset.commits.size(), 6u);
    for (const auto& commit : dataset.commits) {
        EXPECT_EQ(commit.matrix.test_count(), 14u);
        EXPECT_EQ(commit.matrix.class_count(), 12u);
        EXPECT_EQ(commit.tables.size(), 3u);
        EXPECT_GE(commit.matrix.flaky_total(), 1);
        EXPECT_GE(commit.matrix.stable_total(), 1);
    }
}

TEST(Synth, MetricSignalMakesCulpritArgmax) {
    SynthSpec spec = small_spec();
    spec.metric_signal = 1.0;
    spec.signal_metrics = {"changes"};
    for (const auto& commit : generate(spec).commits) {
        const auto& culprit = commit.truth.flaky_classes.front();
        const double culprit_changes = commit.change.values.at(culprit)[0];
        for (const auto& [class_id, row] : commit.change.values) {
            if (class_id != culprit) EXPECT_LT(row[0], culprit_changes);
        }
        // loc untouched: culprit need not dominate there.
    }
}

TEST(Synth, InfeasibleSpecRejected) {
    SynthSpec spec = small_spec();
    spec.baseline_density = 0.5;
    spec.coverage_bias = 0.6;
    EXPECT_THROW(generate(spec), ValidationError);

    SynthSpec bad_metric = small_spec();
    bad_metric.signal_metrics = {"age"};
    EXPECT_THROW(generate(bad_metric), ValidationError);

    SynthSpec one_test = small_spec();
    one_test.tests_per_commit = 1;
    EXPECT_THROW(generate(one_test), ValidationError);
}

TEST(Synth, NullModelStillStructurallySound) {
    SynthSpec spec = small_spec();
    spec.coverage_bias = 0.0;
    spec.metric_signal = 0.0;
    auto dataset = generate(spec);
    for (const auto& commit : dataset.commits) {
        EXPECT_EQ(commit.truth.flaky_classes.size(), 1u);
        EXPECT_FALSE(commit.truth.categories.empty());
    }
}
