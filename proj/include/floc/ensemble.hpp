#pragma once

#include "floc/evolve.hpp"
#include "floc/sbfl.hpp"

#include <string>
#include <vector>

namespace floc {

struct VotingConfig {
    int top_n = 10;

    void validate() const;
};

/// Fractional vote one model casts for a class:
///   1/(best_rank * tie_group_size)  when tied and best_rank <= N
///   1/rank                          when rank <= N
///   0                               otherwise
/// The tied form takes precedence whenever the class is tied at all.
double votes_for(const Ranking& ranking, const std::string& class_id, int top_n);

/// Sums votes across model rankings. Voted candidates are ordered by total
/// votes (max tie-breaking); zero-vote classes follow in ascending median
/// rank across the models, ties broken by class id, each at its own
/// position. Entry scores and the votes field carry the vote totals.
Ranking aggregate_votes(const std::vector<Ranking>& model_rankings, int top_n);

/// Full voting pipeline for one commit: evaluates every model expression on
/// the normalized features, ranks each, then aggregates.
Ranking vote(const FeatureMatrix& normalized_features, const std::vector<EvolvedModel>& models,
             const VotingConfig& config);

}  // namespace floc
