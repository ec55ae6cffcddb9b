#include "floc/sbfl.hpp"

#include "floc/errors.hpp"
#include "floc/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

using namespace floc;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

SpectrumCounts sc(int ef, int es, int nf, int ns) { return SpectrumCounts{ef, es, nf, ns}; }

double ochiai(const SpectrumCounts& c) { return score(c, FormulaId{Formula::Ochiai, 2.0}); }
double barinel(const SpectrumCounts& c) { return score(c, FormulaId{Formula::Barinel, 2.0}); }
double tarantula(const SpectrumCounts& c) { return score(c, FormulaId{Formula::Tarantula, 2.0}); }
double dstar(const SpectrumCounts& c, double star = 2.0) {
    return score(c, FormulaId{Formula::DStar, star});
}

}  // namespace

TEST(SbflScore, OchiaiHandValue) {
    // e_f=2, n_f=0, e_s=1, n_s=5 -> 2/sqrt(2*3) = 2/sqrt(6)
    const double expected = 2.0 / std::sqrt(6.0);
    EXPECT_NEAR(ochiai(sc(2, 1, 0, 5)), expected, 1e-15);
    EXPECT_NEAR(ochiai(sc(2, 1, 0, 5)), 0.816497, 1e-6);
}

TEST(SbflScore, BarinelFlakyOnlyCoverage) { EXPECT_DOUBLE_EQ(barinel(sc(3, 0, 2, 4)), 1.0); }

TEST(SbflScore, TarantulaZeroStableTerm) { EXPECT_DOUBLE_EQ(tarantula(sc(1, 0, 0, 4)), 1.0); }

TEST(SbflScore, DStarHandValue) {
    // e_f=3, e_s=2, n_f=1 -> 3^2 / (2*1) = 4.5
    EXPECT_DOUBLE_EQ(dstar(sc(3, 2, 1, 0)), 4.5);
}

TEST(SbflScore, DStarZeroDenominatorSentinel) {
    EXPECT_EQ(dstar(sc(2, 0, 0, 3)), kInf);
    EXPECT_EQ(dstar(sc(2, 0, 5, 3)), kInf);  // e_s = 0
    EXPECT_EQ(dstar(sc(2, 4, 0, 3)), kInf);  // n_f = 0
}

TEST(SbflScore, ZeroFlakyCoverageScoresZero) {
    for (Formula f : all_formulas()) {
        EXPECT_EQ(score(sc(0, 3, 4, 2), FormulaId{f, 2.0}), 0.0) << formula_name(f);
        EXPECT_EQ(score(sc(0, 0, 0, 0), FormulaId{f, 2.0}), 0.0) << formula_name(f);
    }
}

TEST(SbflScore, ConfigurableDStarExponent) {
    EXPECT_DOUBLE_EQ(dstar(sc(3, 2, 1, 0), 3.0), 27.0 / 2.0);
    EXPECT_THROW(parse_formula("dstar", 0.0), ValidationError);
}

TEST(SbflScore, RangesOverRandomCounts) {
    Rng rng(23);
    for (int i = 0; i < 2000; ++i) {
        auto c = sc(rng.bounded(8), rng.bounded(8), rng.bounded(8), rng.bounded(8));
        const double o = ochiai(c);
        const double b = barinel(c);
        const double t = tarantula(c);
        const double d = dstar(c);
        EXPECT_TRUE(o >= 0.0 && o <= 1.0);
        EXPECT_TRUE(b >= 0.0 && b <= 1.0);
        EXPECT_TRUE(t >= 0.0 && t <= 1.0);
        EXPECT_TRUE(d >= 0.0);  // up to +inf
        EXPECT_FALSE(std::isnan(o) || std::isnan(b) || std::isnan(t) || std::isnan(d));
    }
}

// For fixed e_s, n_s and a fixed flaky-test total, raising e_f never lowers
// any of the four scores.
TEST(SbflScore, MonotoneInFlakyCoverage) {
    Rng rng(29);
    for (int i = 0; i < 300; ++i) {
        const int flaky_total = 1 + rng.bounded(10);
        const int es = rng.bounded(6);
        const int ns = rng.bounded(6);
        for (Formula f : all_formulas()) {
            double previous = -1.0;
            for (int ef = 0; ef <= flaky_total; ++ef) {
                const double value = score(sc(ef, es, flaky_total - ef, ns), FormulaId{f, 2.0});
                EXPECT_GE(value, previous) << formula_name(f);
                previous = value;
            }
        }
    }
}

TEST(SbflRank, TieExample) {
    auto ranking = rank_classes({{"A", 0.9}, {"B", 0.9}, {"C", 0.5}});
    const auto& a = ranking.at("A");
    const auto& b = ranking.at("B");
    const auto& c = ranking.at("C");
    EXPECT_EQ(a.rank, 2);
    EXPECT_EQ(b.rank, 2);
    EXPECT_EQ(a.best_rank, 1);
    EXPECT_EQ(b.best_rank, 1);
    EXPECT_EQ(a.tie_group_size, 2);
    EXPECT_EQ(c.rank, 3);
    EXPECT_EQ(c.best_rank, 3);
    EXPECT_EQ(c.tie_group_size, 1);
    // Display: ties ordered lexicographically.
    EXPECT_EQ(ranking.entries[0].class_id, "A");
    EXPECT_EQ(ranking.entries[1].class_id, "B");
}

TEST(SbflRank, DistinctScoresAreSortPositions) {
    auto ranking = rank_classes({{"x", 0.1}, {"y", 0.9}, {"z", 0.5}});
    EXPECT_EQ(ranking.at("y").rank, 1);
    EXPECT_EQ(ranking.at("z").rank, 2);
    EXPECT_EQ(ranking.at("x").rank, 3);
    for (const auto& e : ranking.entries) {
        EXPECT_EQ(e.tie_group_size, 1);
        EXPECT_EQ(e.best_rank, e.rank);
    }
}

// Brute-force counting oracle with forced ties.
TEST(SbflRank, MatchesBruteForceCounting) {
    Rng rng(31);
    for (int round = 0; round < 100; ++round) {
        std::map<std::string, double> scores;
        const int n = 2 + rng.bounded(30);
        for (int i = 0; i < n; ++i) {
            // Coarse grid forces ties.
            scores["c" + std::to_string(i)] = rng.bounded(5) / 4.0;
        }
        if (rng.bounded(3) == 0) scores["c0"] = kInf;  // exercise the sentinel
        auto ranking = rank_classes(scores);
        for (const auto& [id, value] : scores) {
            int greater = 0, equal = 0;
            for (const auto& [other, other_value] : scores) {
                (void)other;
                if (other_value > value) ++greater;
                if (other_value == value) ++equal;
            }
            const auto& e = ranking.at(id);
            EXPECT_EQ(e.rank, greater + equal);
            EXPECT_EQ(e.best_rank, greater + 1);
            EXPECT_EQ(e.tie_group_size, equal);
        }
    }
}

TEST(SbflRank, NanScoreIsAnError) {
    try {
        rank_classes({{"A", std::numeric_limits<double>::quiet_NaN()}});
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("non-finite suspiciousness"), std::string::npos);
    }
    EXPECT_THROW(rank_classes({}), ValidationError);
}

TEST(SbflRank, InfinityTiesWithInfinity) {
    auto ranking = rank_classes({{"A", kInf}, {"B", kInf}, {"C", 3.0}});
    EXPECT_EQ(ranking.at("A").rank, 2);
    EXPECT_EQ(ranking.at("B").rank, 2);
    EXPECT_EQ(ranking.at("C").rank, 3);
}

// Applying any strictly increasing function leaves all rank fields alone.
TEST(SbflRank, ArgmaxInvariance) {
    Rng rng(37);
    for (int round = 0; round < 50; ++round) {
        std::map<std::string, double> scores;
        const int n = 2 + rng.bounded(20);
        for (int i = 0; i < n; ++i) {
            scores["c" + std::to_string(i)] =
                rng.bounded(2) == 0 ? rng.bounded(4) / 3.0 : kInf;
        }
        std::map<std::string, double> transformed;
        for (const auto& [id, v] : scores) transformed[id] = std::atan(v);
        auto before = rank_classes(scores);
        auto after = rank_classes(transformed);
        ASSERT_EQ(before.entries.size(), after.entries.size());
        for (std::size_t i = 0; i < before.entries.size(); ++i) {
            EXPECT_EQ(before.entries[i].class_id, after.entries[i].class_id);
            EXPECT_EQ(before.entries[i].rank, after.entries[i].rank);
            EXPECT_EQ(before.entries[i].best_rank, after.entries[i].best_rank);
            EXPECT_EQ(before.entries[i].tie_group_size, after.entries[i].tie_group_size);
        }
    }
}

TEST(SbflLocalise, PlantedCulpritRanksFirst) {
    // Culprit covered by every flaky test and no stable one; every other
    // class is covered by at least one stable test.
    const char* text =
        "test,outcome,culprit,other1,other2\n"
        "T1,flaky,1,1,0\n"
        "T2,flaky,1,0,1\n"
        "T3,stable,0,1,1\n"
        "T4,stable,0,1,0\n";
    auto ranking = localise(parse_coverage_text(text, "mem"), FormulaId{Formula::Ochiai, 2.0});
    EXPECT_EQ(ranking.at("culprit").best_rank, 1);
    EXPECT_EQ(ranking.at("culprit").rank, 1);
}

TEST(SbflLocalise, UniformCoverageTiesEveryClass) {
    const char* text =
        "test,outcome,C1,C2,C3\n"
        "T1,flaky,1,1,1\n"
        "T2,stable,1,1,1\n";
    auto ranking = localise(parse_coverage_text(text, "mem"), FormulaId{Formula::Ochiai, 2.0});
    for (const auto& e : ranking.entries) {
        EXPECT_EQ(e.rank, 3);
        EXPECT_EQ(e.best_rank, 1);
        EXPECT_EQ(e.tie_group_size, 3);
    }
}

TEST(SbflLocalise, RequiresBothLabels) {
    const char* only_flaky =
        "test,outcome,C1\n"
        "T1,flaky,1\n";
    EXPECT_THROW(localise(parse_coverage_text(only_flaky, "mem"), FormulaId{}), ValidationError);
}

// Compositional oracle: localise == spectrum_counts -> score -> rank_classes.
TEST(SbflLocalise, MatchesManualComposition) {
    Rng rng(41);
    for (int round = 0; round < 20; ++round) {
        CoverageMatrix m;
        const int tests = 6 + rng.bounded(10);
        const int classes = 4 + rng.bounded(8);
        for (int t = 0; t < tests; ++t) {
            m.test_ids.push_back("T" + std::to_string(t));
            m.outcome.push_back(t % 3 == 0 ? Outcome::Flaky : Outcome::Stable);
        }
        for (int c = 0; c < classes; ++c) m.class_ids.push_back("C" + std::to_string(c));
        for (int t = 0; t < tests; ++t) {
            std::vector<std::uint8_t> row(classes);
            for (int c = 0; c < classes; ++c) row[c] = rng.bounded(2);
            m.activity.push_back(std::move(row));
        }
        for (Formula f : all_formulas()) {
            FormulaId id{f, 2.0};
            std::map<std::string, double> scores;
            for (const auto& [class_id, counts] : spectrum_counts(m)) {
                scores[class_id] = score(counts, id);
            }
            auto manual = rank_classes(scores);
            auto direct = localise(m, id);
            ASSERT_EQ(manual.entries.size(), direct.entries.size());
            for (std::size_t i = 0; i < manual.entries.size(); ++i) {
                EXPECT_EQ(manual.entries[i].class_id, direct.entries[i].class_id);
                EXPECT_EQ(manual.entries[i].rank, direct.entries[i].rank);
                EXPECT_EQ(manual.entries[i].score, direct.entries[i].score);
            }
        }
    }
}

TEST(SbflRankingCsv, RoundTripsWithInfinity) {
    auto ranking = rank_classes({{"A", kInf}, {"B", 0.25}, {"C", 0.0}});
    std::ostringstream out;
    write_ranking(ranking, out);
    EXPECT_NE(out.str().find("A,inf,"), std::string::npos);

    auto tmp = std::filesystem::temp_directory_path() / "floc_ranking_roundtrip.csv";
    {
        std::ofstream f(tmp);
        f << out.str();
    }
    auto back = read_ranking(tmp);
    ASSERT_EQ(back.entries.size(), ranking.entries.size());
    for (std::size_t i = 0; i < back.entries.size(); ++i) {
        EXPECT_EQ(back.entries[i].class_id, ranking.entries[i].class_id);
        EXPECT_EQ(back.entries[i].score, ranking.entries[i].score);
        EXPECT_EQ(back.entries[i].rank, ranking.entries[i].rank);
    }
    std::filesystem::remove(tmp);
}
