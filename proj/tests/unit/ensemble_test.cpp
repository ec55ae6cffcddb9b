#include "floc/ensemble.hpp"

#include "floc/errors.hpp"
#include "floc/rng.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace floc;

namespace {

Ranking ranking_from(const std::map<std::string, double>& scores) {
    return rank_classes(scores);
}

// Hand-built ranking with explicit rank fields (not derived from scores).
Ranking explicit_ranking(std::vector<RankedEntry> entries) {
    Ranking r;
    r.entries = std::move(entries);
    return r;
}

std::vector<std::string> order_of(const Ranking& ranking) {
    std::vector<std::string> ids;
    for (const auto& e : ranking.entries) ids.push_back(e.class_id);
    return ids;
}

}  // namespace

TEST(VotesFor, TopRankGetsFullVote) {
    auto r = ranking_from({{"a", 0.9}, {"b", 0.5}, {"c", 0.1}});
    EXPECT_DOUBLE_EQ(votes_for(r, "a", 10), 1.0);
}

TEST(VotesFor, ThirdPlaceGetsThirdOfAVote) {
    auto r = ranking_from({{"a", 0.9}, {"b", 0.5}, {"c", 0.1}});
    EXPECT_DOUBLE_EQ(votes_for(r, "c", 10), 1.0 / 3.0);
}

TEST(VotesFor, TiedClassSplitsByBestRankTimesGroupSize) {
    // Tie group of 3 with best_rank 2 (ranks: x=1; t1,t2,t3 = 4).
    auto r = ranking_from({{"x", 0.9}, {"t1", 0.5}, {"t2", 0.5}, {"t3", 0.5}});
    ASSERT_EQ(r.at("t1").best_rank, 2);
    ASSERT_EQ(r.at("t1").rank, 4);
    EXPECT_DOUBLE_EQ(votes_for(r, "t1", 3), 1.0 / 6.0);
}

TEST(VotesFor, OutsideTopNGetsNothing) {
    std::vector<RankedEntry> entries;
    for (int i = 0; i < 12; ++i) {
        entries.push_back({"c" + std::to_string(i), 1.0 - i * 0.01, i + 1, i + 1, 1, 0.0});
    }
    auto r = explicit_ranking(std::move(entries));
    EXPECT_DOUBLE_EQ(votes_for(r, "c10", 10), 0.0);  // best_rank 11
    EXPECT_DOUBLE_EQ(votes_for(r, "c9", 10), 0.1);
    EXPECT_THROW(votes_for(r, "nope", 10), ValidationError);
}

TEST(VotesFor, TieStraddlingTheCutoffStillVotes) {
    // Four classes tied at the top, N = 2: rank 4 > N but best_rank 1 <= N.
    auto r = ranking_from({{"a", 1.0}, {"b", 1.0}, {"c", 1.0}, {"d", 1.0}});
    for (const auto& id : {"a", "b", "c", "d"}) {
        EXPECT_DOUBLE_EQ(votes_for(r, id, 2), 1.0 / 4.0);
    }
}

TEST(Vote, HandAggregatedExample) {
    // model1: c1=1, c2=3; model2: c2=1, c1=2. N=3.
    auto m1 = ranking_from({{"c1", 0.9}, {"x", 0.6}, {"c2", 0.3}});
    auto m2 = ranking_from({{"c2", 0.9}, {"c1", 0.6}, {"x", 0.3}});
    ASSERT_EQ(m1.at("c2").rank, 3);
    ASSERT_EQ(m2.at("c1").rank, 2);

    auto voted = aggregate_votes({m1, m2}, 3);
    EXPECT_DOUBLE_EQ(voted.at("c1").votes, 1.0 + 0.5);
    EXPECT_DOUBLE_EQ(voted.at("c2").votes, 1.0 / 3.0 + 1.0);
    EXPECT_EQ(voted.entries[0].class_id, "c1");
    EXPECT_EQ(voted.at("c1").rank, 1);
    EXPECT_EQ(voted.at("c2").rank, 2);
}

TEST(Vote, IdenticalModelsPreserveSingleModelOrder) {
    auto model = ranking_from({{"a", 0.8}, {"b", 0.6}, {"c", 0.4}, {"d", 0.2}});
    for (int copies : {1, 3, 7}) {
        std::vector<Ranking> models(copies, model);
        auto voted = aggregate_votes(models, 3);
        // Top-N voted candidates keep the model's own order.
        EXPECT_EQ(order_of(voted)[0], "a");
        EXPECT_EQ(order_of(voted)[1], "b");
        EXPECT_EQ(order_of(voted)[2], "c");
        EXPECT_DOUBLE_EQ(voted.at("a").votes, static_cast<double>(copies));
    }
}

TEST(Vote, PluralityOfFirstsWithTopOne) {
    // Three models, N=1: two first-places for c2, one for c1.
    auto m1 = ranking_from({{"c1", 0.2}, {"c2", 0.9}, {"c3", 0.5}});
    auto m2 = ranking_from({{"c1", 0.3}, {"c2", 0.8}, {"c3", 0.1}});
    auto m3 = ranking_from({{"c1", 0.9}, {"c2", 0.2}, {"c3", 0.5}});
    auto voted = aggregate_votes({m1, m2, m3}, 1);
    EXPECT_EQ(voted.entries[0].class_id, "c2");
    EXPECT_DOUBLE_EQ(voted.at("c2").votes, 2.0);
    EXPECT_EQ(voted.entries[1].class_id, "c1");
    EXPECT_DOUBLE_EQ(voted.at("c1").votes, 1.0);
    // c3 never voted: median rank fallback places it last.
    EXPECT_EQ(voted.entries[2].class_id, "c3");
    EXPECT_DOUBLE_EQ(voted.at("c3").votes, 0.0);
    EXPECT_EQ(voted.at("c3").rank, 3);
}

TEST(Vote, TotalsAreBoundedByModelCount) {
    Rng rng(83);
    for (int round = 0; round < 30; ++round) {
        const int n_models = 1 + rng.bounded(6);
        const int n_classes = 2 + rng.bounded(12);
        std::vector<Ranking> models;
        for (int m = 0; m < n_models; ++m) {
            std::map<std::string, double> scores;
            for (int c = 0; c < n_classes; ++c) {
                scores["c" + std::to_string(c)] = rng.bounded(5) / 4.0;
            }
            models.push_back(ranking_from(scores));
        }
        auto voted = aggregate_votes(models, 1 + rng.bounded(10));
        for (const auto& e : voted.entries) {
            EXPECT_GE(e.votes, 0.0);
            EXPECT_LE(e.votes, static_cast<double>(n_models) + 1e-12);
        }
        EXPECT_EQ(voted.entries.size(), static_cast<std::size_t>(n_classes));
    }
}

TEST(Vote, ModelWithNoVotesLeavesVotedOrderAlone) {
    auto m1 = ranking_from({{"a", 0.9}, {"b", 0.7}, {"c", 0.5}, {"d", 0.1}});
    auto m2 = ranking_from({{"b", 0.9}, {"a", 0.7}, {"d", 0.5}, {"c", 0.1}});
    auto before = aggregate_votes({m1, m2}, 2);

    // All four classes pushed outside the top N with untied ranks.
    auto silent = explicit_ranking({{"a", 0.4, 11, 11, 1, 0.0},
                                    {"b", 0.3, 12, 12, 1, 0.0},
                                    {"c", 0.2, 13, 13, 1, 0.0},
                                    {"d", 0.1, 14, 14, 1, 0.0}});
    auto after = aggregate_votes({m1, m2, silent}, 2);

    std::vector<std::string> voted_before;
    for (const auto& e : before.entries) {
        if (e.votes > 0) voted_before.push_back(e.class_id);
    }
    std::vector<std::string> voted_after;
    for (const auto& e : after.entries) {
        if (e.votes > 0) voted_after.push_back(e.class_id);
    }
    EXPECT_EQ(voted_before, voted_after);
    for (const auto& id : voted_before) {
        EXPECT_DOUBLE_EQ(before.at(id).votes, after.at(id).votes);
    }
}

TEST(Vote, OrderOfModelsDoesNotMatter) {
    Rng rng(89);
    std::vector<Ranking> models;
    for (int m = 0; m < 5; ++m) {
        std::map<std::string, double> scores;
        for (int c = 0; c < 8; ++c) scores["c" + std::to_string(c)] = rng.bounded(4) / 3.0;
        models.push_back(ranking_from(scores));
    }
    auto baseline = aggregate_votes(models, 3);
    for (int round = 0; round < 10; ++round) {
        auto shuffled = models;
        rng.shuffle(shuffled);
        auto voted = aggregate_votes(shuffled, 3);
        EXPECT_EQ(order_of(voted), order_of(baseline));
        for (const auto& e : baseline.entries) {
            EXPECT_DOUBLE_EQ(voted.at(e.class_id).votes, e.votes);
        }
    }
}

TEST(Vote, ZeroVoteFallbackSortsByMedianRank) {
    // N=1 so only the top entry of each model votes. Fallback classes keep
    // ascending median rank; equal medians break by class id.
    auto m1 = ranking_from({{"top", 1.0}, {"near", 0.8}, {"far", 0.2}, {"mid", 0.5}});
    auto m2 = ranking_from({{"top", 1.0}, {"near", 0.7}, {"far", 0.1}, {"mid", 0.4}});
    auto voted = aggregate_votes({m1, m2}, 1);
    EXPECT_EQ(order_of(voted), (std::vector<std::string>{"top", "near", "mid", "far"}));
    EXPECT_EQ(voted.at("near").rank, 2);
    EXPECT_EQ(voted.at("mid").rank, 3);
    EXPECT_EQ(voted.at("far").rank, 4);
}

TEST(Vote, RejectsMismatchedClassSets) {
    auto m1 = ranking_from({{"a", 0.9}, {"b", 0.5}});
    auto m2 = ranking_from({{"a", 0.9}, {"c", 0.5}});
    EXPECT_THROW(aggregate_votes({m1, m2}, 5), ValidationError);
    EXPECT_THROW(aggregate_votes({}, 5), ValidationError);
    EXPECT_THROW(aggregate_votes({m1}, 0), ValidationError);
}

TEST(Vote, PipelineEvaluatesModelsOnFeatures) {
    FeatureMatrix features;
    features.columns = {"ochiai", "changes"};
    features.class_ids = {"a", "b", "c"};
    features.values = {{1.0, 0.0}, {0.5, 1.0}, {0.0, 0.5}};

    EvolvedModel by_ochiai;
    by_ochiai.expr = parse_expression("ochiai");
    EvolvedModel by_changes;
    by_changes.expr = parse_expression("changes");

    VotingConfig config;
    config.top_n = 2;
    auto voted = vote(features, {by_ochiai, by_changes}, config);
    // a: 1 + 0 (rank 3 under changes, outside N=2)... votes: a=1.0, b=0.5+1.0, c=0+0.5
    EXPECT_DOUBLE_EQ(voted.at("b").votes, 1.5);
    EXPECT_DOUBLE_EQ(voted.at("a").votes, 1.0);
    EXPECT_DOUBLE_EQ(voted.at("c").votes, 0.5);
    EXPECT_EQ(voted.entries[0].class_id, "b");
}
