#pragma once

#include "floc/coverage.hpp"

#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace floc {

enum class Formula { Ochiai, Barinel, Tarantula, DStar };

struct FormulaId {
    Formula name = Formula::Ochiai;
    double dstar_exponent = 2.0;  // the `*` of DStar, must be > 0
};

FormulaId parse_formula(const std::string& name, double dstar_exponent = 2.0);
std::string formula_name(Formula formula);
const std::vector<Formula>& all_formulas();

/// Suspiciousness of one class under one formula.
///
/// Zero-denominator convention: with e_f > 0 a vanishing denominator yields
/// +infinity (a class covered exclusively by flaky tests is maximally
/// suspicious); with e_f = 0 the score is 0.
double score(const SpectrumCounts& counts, const FormulaId& formula);

struct RankedEntry {
    std::string class_id;
    double score = 0.0;
    int rank = 0;            // max tie-breaker: worst rank of the tie group
    int best_rank = 0;       // 1 + count of strictly better scores
    int tie_group_size = 1;  // rank - best_rank + 1
    double votes = 0.0;      // populated by the voting ensemble only
};

/// Entries ordered by score descending; ties displayed in class_id order.
struct Ranking {
    std::vector<RankedEntry> entries;

    const RankedEntry& at(const std::string& class_id) const;  // throws on unknown id
    bool contains(const std::string& class_id) const;
};

/// Max tie-breaker ranking: rank(c) = |{score > score(c)}| + |{score = score(c)}|.
/// Throws ValidationError on an empty map or any NaN score.
Ranking rank_classes(const std::map<std::string, double>& scores);

/// spectrum_counts -> score -> rank_classes over every class in the matrix.
/// Requires at least one flaky and one stable test.
Ranking localise(const CoverageMatrix& matrix, const FormulaId& formula);

/// Ranking CSV: `class,score,rank,best_rank,tie_group_size[,votes]`.
/// Infinite scores serialize as `inf`.
void write_ranking(const Ranking& ranking, std::ostream& out, bool with_votes = false);
Ranking read_ranking(const std::filesystem::path& file);

}  // namespace floc
