#pragma once

#include "floc/features.hpp"

#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace floc {

enum class ExprOp { Add, Sub, Mul, Div, Sqrt, Neg };

/// Arithmetic expression tree over feature terminals and numeric constants.
/// Protected semantics: div(a,b) = 1 when |b| <= 1e-9; sqrt(x) = sqrt(|x|).
struct Expression {
    enum class Kind { Operator, Terminal, Constant };

    Kind kind = Kind::Constant;
    ExprOp op = ExprOp::Add;
    std::string terminal;
    double value = 0.0;
    std::vector<Expression> children;

    static Expression make_terminal(std::string name);
    static Expression make_constant(double value);
    static Expression make_op(ExprOp op, std::vector<Expression> children);

    int depth() const;  // single node = 1
    int size() const;   // node count
};

/// Prefix notation, e.g. `add(mul(ochiai,changes),sqrt(loc))`.
std::string expression_to_string(const Expression& expr);
Expression parse_expression(const std::string& text);

/// Pointwise evaluation over the feature matrix rows.
/// Throws ValidationError when a terminal is missing from the features.
std::map<std::string, double> evaluate_expression(const Expression& expr,
                                                  const FeatureMatrix& features);

/// One localisation problem: normalized features plus the true flaky classes.
struct TrainingCommit {
    std::string commit_id;
    FeatureMatrix features;
    std::vector<std::string> flaky_classes;
};

/// Mean over commits of the best (minimum) max-tie-breaker rank among that
/// commit's flaky classes. Lower is better; 1.0 is perfect. An expression
/// producing NaN scores is assigned +infinity instead of raising.
double fitness(const Expression& expr, const std::vector<TrainingCommit>& dataset);

struct GPConfig {
    int population = 40;
    int generations = 100;
    int seeds = 30;
    int folds = 10;
    int max_depth = 8;
    int tournament_size = 3;
    double crossover_rate = 0.8;
    double mutation_rate = 0.1;
    int init_depth_min = 2;
    int init_depth_max = 4;
    std::string feature_set = "sbfl";  // sbfl | sbfl+flakiness | sbfl+change | sbfl+size

    void validate() const;
};

/// Metric families implied by a feature_set name (empty for plain sbfl).
std::vector<MetricFamily> feature_set_families(const std::string& feature_set);

struct EvolvedModel {
    Expression expr;
    double fitness = std::numeric_limits<double>::infinity();  // training fitness
    std::uint64_t seed = 0;
    int fold = -1;  // -1 when trained on the full dataset
    double holdout_fitness = std::numeric_limits<double>::quiet_NaN();
    std::string feature_set;
};

/// One GP run over the whole dataset. Deterministic for a fixed seed;
/// returns the best individual encountered across all generations
/// (fitness ties break toward the smaller tree).
EvolvedModel evolve(const std::vector<TrainingCommit>& dataset, const GPConfig& config,
                    std::uint64_t seed);

/// Seeded shuffle of [0, n) split into near-equal parts; the first n % folds
/// parts receive one extra element.
std::vector<std::vector<std::size_t>> fold_partition(std::size_t n, int folds,
                                                     std::uint64_t seed);

/// Partitions the dataset with fold_partition, then trains one model per
/// fold on the remaining parts and scores it on the held-out part.
std::vector<EvolvedModel> cross_validate(const std::vector<TrainingCommit>& dataset,
                                         const GPConfig& config, std::uint64_t seed);

/// Lower-median by training fitness: element floor((n-1)/2) of the sorted list.
const EvolvedModel& select_median(const std::vector<EvolvedModel>& models);

/// Model bundle: JSON-lines of
/// {"expression":..,"feature_set":..,"seed":..,"fold":..,"fitness":..,"holdout_fitness":..}
void write_model_bundle(const std::vector<EvolvedModel>& models, std::ostream& out);
std::vector<EvolvedModel> read_model_bundle(const std::filesystem::path& file);

}  // namespace floc
