#include "floc/ensemble.hpp"

#include "floc/errors.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>

namespace floc {

void VotingConfig::validate() const {
    if (top_n < 1) throw ValidationError("top_n must be >= 1");
}

double votes_for(const Ranking& ranking, const std::string& class_id, int top_n) {
    const RankedEntry& entry = ranking.at(class_id);
    if (entry.tie_group_size > 1 && entry.best_rank <= top_n) {
        return 1.0 / (static_cast<double>(entry.best_rank) *
                      static_cast<double>(entry.tie_group_size));
    }
    if (entry.rank <= top_n) return 1.0 / static_cast<double>(entry.rank);
    return 0.0;
}

Ranking aggregate_votes(const std::vector<Ranking>& model_rankings, int top_n) {
    if (model_rankings.empty()) throw ValidationError("voting needs at least one model");
    if (top_n < 1) throw ValidationError("top_n must be >= 1");

    const Ranking& first = model_rankings.front();
    for (const auto& ranking : model_rankings) {
        if (ranking.entries.size() != first.entries.size()) {
            throw ValidationError("model rankings cover different class sets");
        }
    }

    std::map<std::string, double> votes;
    std::map<std::string, std::vector<int>> ranks;
    for (const auto& entry : first.entries) {
        votes[entry.class_id] = 0.0;
        ranks[entry.class_id] = {};
    }
    for (const auto& ranking : model_rankings) {
        for (const auto& entry : ranking.entries) {
            auto it = votes.find(entry.class_id);
            if (it == votes.end()) {
                throw ValidationError("model rankings cover different class sets: " +
                                      entry.class_id);
            }
            it->second += votes_for(ranking, entry.class_id, top_n);
            ranks[entry.class_id].push_back(entry.rank);
        }
    }

    std::map<std::string, double> voted;
    std::vector<std::string> unvoted;
    for (const auto& [class_id, total] : votes) {
        if (total > 0.0) {
            voted.emplace(class_id, total);
        } else {
            unvoted.push_back(class_id);
        }
    }

    Ranking result;
    if (!voted.empty()) {
        result = rank_classes(voted);
        for (auto& entry : result.entries) entry.votes = entry.score;
    }

    // Median-rank fallback: a total order over the unvoted remainder.
    auto median_rank = [&](const std::string& class_id) {
        auto values = ranks.at(class_id);
        std::sort(values.begin(), values.end());
        const std::size_t n = values.size();
        return (static_cast<double>(values[(n - 1) / 2]) + static_cast<double>(values[n / 2])) /
               2.0;
    };
    std::stable_sort(unvoted.begin(), unvoted.end(),
                     [&](const std::string& a, const std::string& b) {
                         const double ma = median_rank(a);
                         const double mb = median_rank(b);
                         if (ma != mb) return ma < mb;
                         return a < b;
                     });
    int position = static_cast<int>(result.entries.size());
    for (const auto& class_id : unvoted) {
        ++position;
        result.entries.push_back(RankedEntry{class_id, 0.0, position, position, 1, 0.0});
    }
    return result;
}

Ranking vote(const FeatureMatrix& normalized_features, const std::vector<EvolvedModel>& models,
             const VotingConfig& config) {
    config.validate();
    if (models.empty()) throw ValidationError("voting needs at least one model");
    std::vector<Ranking> rankings;
    rankings.reserve(models.size());
    for (const auto& model : models) {
        rankings.push_back(rank_classes(evaluate_expression(model.expr, normalized_features)));
    }
    return aggregate_votes(rankings, config.top_n);
}

}  // namespace floc
