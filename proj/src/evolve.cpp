#include "floc/evolve.hpp"

#include "floc/csv.hpp"
#include "floc/errors.hpp"
#include "floc/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace floc {

namespace {

using nlohmann::json;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kDivEps = 1e-9;

struct OpInfo {
    ExprOp op;
    const char* name;
    int arity;
};

constexpr OpInfo kOps[] = {
    {ExprOp::Add, "add", 2}, {ExprOp::Sub, "sub", 2},  {ExprOp::Mul, "mul", 2},
    {ExprOp::Div, "div", 2}, {ExprOp::Sqrt, "sqrt", 1}, {ExprOp::Neg, "neg", 1},
};

const OpInfo& op_info(ExprOp op) {
    for (const auto& info : kOps) {
        if (info.op == op) return info;
    }
    throw ValidationError("unknown operator");
}

const OpInfo* find_op(const std::string& name) {
    for (const auto& info : kOps) {
        if (name == info.name) return &info;
    }
    return nullptr;
}

double apply_op(ExprOp op, const double* args) {
    switch (op) {
        case ExprOp::Add: return args[0] + args[1];
        case ExprOp::Sub: return args[0] - args[1];
        case ExprOp::Mul: return args[0] * args[1];
        case ExprOp::Div: return std::abs(args[1]) <= kDivEps ? 1.0 : args[0] / args[1];
        case ExprOp::Sqrt: return std::sqrt(std::abs(args[0]));
        case ExprOp::Neg: return -args[0];
    }
    return 0.0;
}

double eval_node(const Expression& node, const std::vector<double>& row,
                 const std::vector<int>& terminal_columns, int& terminal_cursor);

/// Evaluation against one feature row. Terminal column indices are resolved
/// once per matrix and consumed in tree preorder (terminal_cursor).
double eval_row(const Expression& node, const std::vector<double>& row,
                const std::vector<int>& terminal_columns, int& terminal_cursor) {
    switch (node.kind) {
        case Expression::Kind::Constant: return node.value;
        case Expression::Kind::Terminal:
            return row[static_cast<std::size_t>(terminal_columns[terminal_cursor++])];
        case Expression::Kind::Operator: {
            double args[2] = {0.0, 0.0};
            for (std::size_t i = 0; i < node.children.size(); ++i) {
                args[i] = eval_row(node.children[i], row, terminal_columns, terminal_cursor);
            }
            return apply_op(node.op, args);
        }
    }
    return 0.0;
}

void collect_terminal_columns(const Expression& node, const FeatureMatrix& features,
                              std::vector<int>& out) {
    if (node.kind == Expression::Kind::Terminal) {
        int idx = features.column_index(node.terminal);
        if (idx < 0) throw ValidationError("unknown terminal name: " + node.terminal);
        out.push_back(idx);
    }
    for (const auto& child : node.children) collect_terminal_columns(child, features, out);
}

/// Scores for every class of one commit, aligned with features.class_ids.
std::vector<double> eval_scores(const Expression& expr, const FeatureMatrix& features) {
    std::vector<int> terminal_columns;
    collect_terminal_columns(expr, features, terminal_columns);
    std::vector<double> scores;
    scores.reserve(features.values.size());
    for (const auto& row : features.values) {
        int cursor = 0;
        scores.push_back(eval_row(expr, row, terminal_columns, cursor));
    }
    return scores;
}

/// Best max-tie-breaker rank among the flaky classes, or +inf on NaN scores.
double best_flaky_rank(const std::vector<double>& scores, const FeatureMatrix& features,
                       const std::vector<std::string>& flaky_classes) {
    for (double s : scores) {
        if (std::isnan(s)) return kInf;
    }
    double best = kInf;
    for (const auto& flaky : flaky_classes) {
        auto it = std::find(features.class_ids.begin(), features.class_ids.end(), flaky);
        if (it == features.class_ids.end()) {
            throw ValidationError("flaky class missing from features: " + flaky);
        }
        const double target = scores[static_cast<std::size_t>(it - features.class_ids.begin())];
        int rank = 0;
        for (double s : scores) {
            if (s >= target) ++rank;  // strictly greater plus the whole tie group
        }
        best = std::min(best, static_cast<double>(rank));
    }
    return best;
}

bool better(double fitness_a, int size_a, double fitness_b, int size_b) {
    if (fitness_a != fitness_b) return fitness_a < fitness_b;
    return size_a < size_b;  // parsimony on ties
}

struct Parser {
    const std::string& text;
    std::size_t pos = 0;

    explicit Parser(const std::string& t) : text(t) {}

    void skip_ws() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    }

    char peek() {
        skip_ws();
        return pos < text.size() ? text[pos] : '\0';
    }

    void expect(char c) {
        skip_ws();
        if (pos >= text.size() || text[pos] != c) {
            throw ParseError("expression parse error at offset " + std::to_string(pos) +
                             ": expected '" + std::string(1, c) + "'");
        }
        ++pos;
    }

    Expression parse() {
        Expression e = parse_node();
        skip_ws();
        if (pos != text.size()) {
            throw ParseError("trailing characters in expression at offset " +
                             std::to_string(pos));
        }
        return e;
    }

    Expression parse_node() {
        skip_ws();
        if (pos >= text.size()) throw ParseError("unexpected end of expression");
        const char c = text[pos];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '.' || c == '+') {
            return parse_number();
        }
        std::string name = parse_identifier();
        skip_ws();
        if (peek() == '(') {
            const OpInfo* info = find_op(name);
            if (!info) throw ParseError("unknown operator: " + name);
            expect('(');
            std::vector<Expression> children;
            children.push_back(parse_node());
            while (peek() == ',') {
                expect(',');
                children.push_back(parse_node());
            }
            expect(')');
            if (static_cast<int>(children.size()) != info->arity) {
                throw ParseError("operator " + name + " expects " + std::to_string(info->arity) +
                                 " arguments");
            }
            return Expression::make_op(info->op, std::move(children));
        }
        return Expression::make_terminal(std::move(name));
    }

    std::string parse_identifier() {
        skip_ws();
        std::size_t start = pos;
        while (pos < text.size() &&
               (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_')) {
            ++pos;
        }
        if (start == pos) {
            throw ParseError("expected identifier at offset " + std::to_string(pos));
        }
        return text.substr(start, pos - start);
    }

    Expression parse_number() {
        std::size_t start = pos;
        if (pos < text.size() && (text[pos] == '-' || text[pos] == '+')) ++pos;
        while (pos < text.size() &&
               (std::isdigit(static_cast<unsigned char>(text[pos])) || text[pos] == '.' ||
                text[pos] == 'e' || text[pos] == 'E' ||
                ((text[pos] == '-' || text[pos] == '+') &&
                 (text[pos - 1] == 'e' || text[pos - 1] == 'E')))) {
            ++pos;
        }
        return Expression::make_constant(
            csv::parse_double(text.substr(start, pos - start), "expression constant"));
    }
};

/// Random tree generation (grow / full), used by init and mutation.
class TreeGen {
public:
    TreeGen(const std::vector<std::string>& terminals, Rng& rng)
        : terminals_(terminals), rng_(rng) {}

    Expression leaf() {
        const int n = static_cast<int>(terminals_.size());
        const int pick = rng_.bounded(n + 1);
        if (pick == n) return Expression::make_constant(rng_.uniform01());
        return Expression::make_terminal(terminals_[static_cast<std::size_t>(pick)]);
    }

    Expression random_op_node(int levels_left, bool full) {
        const auto& info = kOps[rng_.bounded(static_cast<int>(std::size(kOps)))];
        std::vector<Expression> children;
        children.reserve(static_cast<std::size_t>(info.arity));
        for (int i = 0; i < info.arity; ++i) {
            children.push_back(full ? gen_full(levels_left - 1) : gen_grow(levels_left - 1));
        }
        return Expression::make_op(info.op, std::move(children));
    }

    Expression gen_full(int levels) {
        if (levels <= 1) return leaf();
        return random_op_node(levels, /*full=*/true);
    }

    Expression gen_grow(int levels) {
        if (levels <= 1) return leaf();
        const int n_terms = static_cast<int>(terminals_.size()) + 1;
        const int n_ops = static_cast<int>(std::size(kOps));
        if (rng_.bounded(n_terms + n_ops) < n_terms) return leaf();
        return random_op_node(levels, /*full=*/false);
    }

private:
    const std::vector<std::string>& terminals_;
    Rng& rng_;
};

std::vector<Expression*> all_nodes(Expression& root) {
    std::vector<Expression*> nodes;
    std::vector<Expression*> stack{&root};
    while (!stack.empty()) {
        Expression* node = stack.back();
        stack.pop_back();
        nodes.push_back(node);
        for (auto& child : node->children) stack.push_back(&child);
    }
    return nodes;
}

struct Individual {
    Expression expr;
    double fitness = kInf;
};

}  // namespace

Expression Expression::make_terminal(std::string name) {
    Expression e;
    e.kind = Kind::Terminal;
    e.terminal = std::move(name);
    return e;
}

Expression Expression::make_constant(double value) {
    Expression e;
    e.kind = Kind::Constant;
    e.value = value;
    return e;
}

Expression Expression::make_op(ExprOp op, std::vector<Expression> children) {
    const auto& info = op_info(op);
    if (static_cast<int>(children.size()) != info.arity) {
        throw ValidationError(std::string("operator ") + info.name + " expects " +
                              std::to_string(info.arity) + " children");
    }
    Expression e;
    e.kind = Kind::Operator;
    e.op = op;
    e.children = std::move(children);
    return e;
}

int Expression::depth() const {
    int deepest = 0;
    for (const auto& child : children) deepest = std::max(deepest, child.depth());
    return 1 + deepest;
}

int Expression::size() const {
    int count = 1;
    for (const auto& child : children) count += child.size();
    return count;
}

std::string expression_to_string(const Expression& expr) {
    switch (expr.kind) {
        case Expression::Kind::Terminal: return expr.terminal;
        case Expression::Kind::Constant: return csv::format_double(expr.value);
        case Expression::Kind::Operator: {
            std::string out = op_info(expr.op).name;
            out += '(';
            for (std::size_t i = 0; i < expr.children.size(); ++i) {
                if (i) out += ',';
                out += expression_to_string(expr.children[i]);
            }
            out += ')';
            return out;
        }
    }
    return "";
}

Expression parse_expression(const std::string& text) {
    Parser parser(text);
    return parser.parse();
}

std::map<std::string, double> evaluate_expression(const Expression& expr,
                                                  const FeatureMatrix& features) {
    features.validate();
    const auto scores = eval_scores(expr, features);
    std::map<std::string, double> out;
    for (std::size_t i = 0; i < features.class_ids.size(); ++i) {
        out.emplace(features.class_ids[i], scores[i]);
    }
    return out;
}

double fitness(const Expression& expr, const std::vector<TrainingCommit>& dataset) {
    if (dataset.empty()) throw ValidationError("fitness needs a non-empty dataset");
    double total = 0.0;
    for (const auto& commit : dataset) {
        const auto scores = eval_scores(expr, commit.features);
        const double rank = best_flaky_rank(scores, commit.features, commit.flaky_classes);
        if (std::isinf(rank)) return kInf;
        total += rank;
    }
    return total / static_cast<double>(dataset.size());
}

void GPConfig::validate() const {
    if (population < 2) throw ValidationError("population must be >= 2");
    if (generations < 0) throw ValidationError("generations must be >= 0");
    if (seeds < 1) throw ValidationError("seeds must be >= 1");
    if (folds < 2) throw ValidationError("folds must be >= 2");
    if (max_depth < 1) throw ValidationError("max_depth must be >= 1");
    if (tournament_size < 1) throw ValidationError("tournament_size must be >= 1");
    if (crossover_rate < 0 || crossover_rate > 1) {
        throw ValidationError("crossover_rate must be in [0,1]");
    }
    if (mutation_rate < 0 || mutation_rate > 1) {
        throw ValidationError("mutation_rate must be in [0,1]");
    }
    if (init_depth_min < 1 || init_depth_max < init_depth_min) {
        throw ValidationError("bad init depth range");
    }
    feature_set_families(feature_set);
}

std::vector<MetricFamily> feature_set_families(const std::string& feature_set) {
    if (feature_set == "sbfl") return {};
    if (feature_set == "sbfl+flakiness") return {MetricFamily::Flakiness};
    if (feature_set == "sbfl+change") return {MetricFamily::Change};
    if (feature_set == "sbfl+size") return {MetricFamily::Size};
    throw ValidationError("unknown feature set: " + feature_set);
}

EvolvedModel evolve(const std::vector<TrainingCommit>& dataset, const GPConfig& config,
                    std::uint64_t seed) {
    config.validate();
    if (dataset.empty()) throw ValidationError("evolve needs a non-empty dataset");
    const std::vector<std::string>& terminals = dataset.front().features.columns;
    for (const auto& commit : dataset) {
        if (commit.features.columns != terminals) {
            throw ValidationError("inconsistent feature columns across commits");
        }
    }

    Rng rng(seed);
    TreeGen gen(terminals, rng);

    std::vector<Individual> population;
    population.reserve(static_cast<std::size_t>(config.population));
    for (int i = 0; i < config.population; ++i) {
        const int depth =
            config.init_depth_min + rng.bounded(config.init_depth_max - config.init_depth_min + 1);
        const bool full = rng.bounded(2) == 0;
        Individual ind;
        ind.expr = full ? gen.gen_full(depth) : gen.gen_grow(depth);
        ind.fitness = fitness(ind.expr, dataset);
        population.push_back(std::move(ind));
    }

    Individual best = population.front();
    auto consider = [&](const Individual& candidate) {
        if (better(candidate.fitness, candidate.expr.size(), best.fitness, best.expr.size())) {
            best = candidate;
        }
    };
    for (const auto& ind : population) consider(ind);

    auto tournament = [&]() -> const Individual& {
        int winner = rng.bounded(config.population);
        for (int t = 1; t < config.tournament_size; ++t) {
            int challenger = rng.bounded(config.population);
            const auto& a = population[static_cast<std::size_t>(challenger)];
            const auto& b = population[static_cast<std::size_t>(winner)];
            if (better(a.fitness, a.expr.size(), b.fitness, b.expr.size())) {
                winner = challenger;
            }
        }
        return population[static_cast<std::size_t>(winner)];
    };

    for (int generation = 0; generation < config.generations; ++generation) {
        std::vector<Individual> offspring;
        offspring.reserve(population.size());
        for (int i = 0; i < config.population; ++i) offspring.push_back(tournament());

        // Subtree crossover on adjacent pairs; offspring deeper than
        // max_depth revert to their parent.
        for (int i = 0; i + 1 < config.population; i += 2) {
            if (rng.uniform01() >= config.crossover_rate) continue;
            Individual& a = offspring[static_cast<std::size_t>(i)];
            Individual& b = offspring[static_cast<std::size_t>(i + 1)];
            Expression backup_a = a.expr;
            Expression backup_b = b.expr;
            auto nodes_a = all_nodes(a.expr);
            auto nodes_b = all_nodes(b.expr);
            Expression* pick_a = nodes_a[static_cast<std::size_t>(
                rng.bounded(static_cast<int>(nodes_a.size())))];
            Expression* pick_b = nodes_b[static_cast<std::size_t>(
                rng.bounded(static_cast<int>(nodes_b.size())))];
            std::swap(*pick_a, *pick_b);
            bool a_changed = true;
            bool b_changed = true;
            if (a.expr.depth() > config.max_depth) {
                a.expr = std::move(backup_a);
                a_changed = false;
            }
            if (b.expr.depth() > config.max_depth) {
                b.expr = std::move(backup_b);
                b_changed = false;
            }
            if (a_changed) a.fitness = fitness(a.expr, dataset);
            if (b_changed) b.fitness = fitness(b.expr, dataset);
        }

        // Uniform subtree mutation.
        for (auto& ind : offspring) {
            if (rng.uniform01() >= config.mutation_rate) continue;
            Expression backup = ind.expr;
            auto nodes = all_nodes(ind.expr);
            Expression* pick =
                nodes[static_cast<std::size_t>(rng.bounded(static_cast<int>(nodes.size())))];
            *pick = gen.gen_grow(1 + rng.bounded(2));
            if (ind.expr.depth() > config.max_depth) {
                ind.expr = std::move(backup);
            } else {
                ind.fitness = fitness(ind.expr, dataset);
            }
        }

        population = std::move(offspring);
        for (const auto& ind : population) consider(ind);
    }

    EvolvedModel model;
    model.expr = best.expr;
    model.fitness = best.fitness;
    model.seed = seed;
    model.feature_set = config.feature_set;
    return model;
}

std::vector<std::vector<std::size_t>> fold_partition(std::size_t n, int folds,
                                                     std::uint64_t seed) {
    if (folds < 2) throw ValidationError("folds must be >= 2");
    if (n < static_cast<std::size_t>(folds)) {
        throw ValidationError("dataset smaller than fold count: " + std::to_string(n) +
                              " commits for " + std::to_string(folds) + " folds");
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(derive_seed(seed, 0x0f01d5));
    shuffle_rng.shuffle(order);

    std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(folds));
    std::size_t cursor = 0;
    for (std::size_t f = 0; f < members.size(); ++f) {
        std::size_t size = n / members.size() + (f < n % members.size() ? 1 : 0);
        for (std::size_t k = 0; k < size; ++k) members[f].push_back(order[cursor++]);
    }
    return members;
}

std::vector<EvolvedModel> cross_validate(const std::vector<TrainingCommit>& dataset,
                                         const GPConfig& config, std::uint64_t seed) {
    config.validate();
    const auto fold_members = fold_partition(dataset.size(), config.folds, seed);
    const std::size_t folds = fold_members.size();

    std::vector<EvolvedModel> models;
    models.reserve(folds);
    for (std::size_t f = 0; f < folds; ++f) {
        std::vector<TrainingCommit> train;
        std::vector<TrainingCommit> held_out;
        for (std::size_t g = 0; g < folds; ++g) {
            for (std::size_t idx : fold_members[g]) {
                (g == f ? held_out : train).push_back(dataset[idx]);
            }
        }
        EvolvedModel model = evolve(train, config, derive_seed(seed, f + 1));
        model.fold = static_cast<int>(f);
        model.holdout_fitness = held_out.empty() ? std::numeric_limits<double>::quiet_NaN()
                                                 : fitness(model.expr, held_out);
        models.push_back(std::move(model));
    }
    return models;
}

const EvolvedModel& select_median(const std::vector<EvolvedModel>& models) {
    if (models.empty()) throw ValidationError("select_median needs at least one model");
    std::vector<std::size_t> order(models.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return models[a].fitness < models[b].fitness;
    });
    return models[order[(models.size() - 1) / 2]];
}

void write_model_bundle(const std::vector<EvolvedModel>& models, std::ostream& out) {
    for (const auto& model : models) {
        json obj{{"expression", expression_to_string(model.expr)},
                 {"feature_set", model.feature_set},
                 {"seed", model.seed},
                 {"fitness", model.fitness}};
        if (model.fold >= 0) obj["fold"] = model.fold;
        if (!std::isnan(model.holdout_fitness)) obj["holdout_fitness"] = model.holdout_fitness;
        out << obj.dump() << '\n';
    }
}

std::vector<EvolvedModel> read_model_bundle(const std::filesystem::path& file) {
    std::vector<EvolvedModel> models;
    std::size_t line_no = 0;
    for (const auto& line : csv::read_lines(file)) {
        ++line_no;
        if (csv::trim(line).empty()) continue;
        const std::string where = file.string() + ":" + std::to_string(line_no);
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError(where + ": bad model json: " + e.what());
        }
        try {
            EvolvedModel model;
            model.expr = parse_expression(obj.at("expression").get<std::string>());
            model.feature_set = obj.value("feature_set", std::string("sbfl"));
            model.seed = obj.value("seed", std::uint64_t{0});
            model.fitness = obj.value("fitness", kInf);
            model.fold = obj.value("fold", -1);
            model.holdout_fitness =
                obj.value("holdout_fitness", std::numeric_limits<double>::quiet_NaN());
            models.push_back(std::move(model));
        } catch (const json::exception& e) {
            throw ParseError(where + ": bad model record: " + e.what());
        }
    }
    if (models.empty()) throw ParseError(file.string() + ": empty model bundle");
    return models;
}

}  // namespace floc
