// floc: pinpoint program classes responsible for flaky-test behaviour.
//
// Subcommands: rank, evolve, vote, eval, ddu, metrics (change|scan), synth.
// Exit codes: 0 success, 1 input/validation error, 2 internal error.
// Progress goes to stderr; data goes to files or stdout only.

#include "floc/csv.hpp"
#include "floc/dataset.hpp"
#include "floc/ensemble.hpp"
#include "floc/errors.hpp"
#include "floc/evaluate.hpp"
#include "floc/evolve.hpp"
#include "floc/features.hpp"
#include "floc/rng.hpp"
#include "floc/sbfl.hpp"
#include "floc/synth.hpp"
#include "floc/version.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using floc::csv::format_double;
using nlohmann::json;

std::filesystem::path default_out_dir() {
    if (const char* env = std::getenv("FLOC_OUT_DIR")) return env;
    return ".";
}

void emit(const std::string& content, const std::string& out_file) {
    if (out_file.empty()) {
        std::cout << content;
    } else {
        floc::csv::write_file(out_file, content);
    }
}

/// Reproducibility manifest written beside every file output.
void write_manifest(const std::filesystem::path& beside, const std::string& command,
                    const json& params) {
    json manifest{{"tool", "floc"},
                  {"version", floc::kVersion},
                  {"command", command},
                  {"params", params}};
    std::filesystem::path path = beside;
    path += ".manifest.json";
    floc::csv::write_file(path, manifest.dump(2) + "\n");
}

void warn_all(const std::vector<std::string>& warnings) {
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

struct RankArgs {
    std::string coverage;
    std::string formula = "ochiai";
    double dstar_exp = 2.0;
    std::string out;
};

int run_rank(const RankArgs& args) {
    const auto matrix = floc::parse_coverage(args.coverage);
    const auto id = floc::parse_formula(args.formula, args.dstar_exp);
    const auto ranking = floc::localise(matrix, id);
    std::ostringstream out;
    floc::write_ranking(ranking, out);
    emit(out.str(), args.out);
    if (!args.out.empty()) {
        write_manifest(args.out, "rank",
                       json{{"coverage", args.coverage},
                            {"formula", args.formula},
                            {"dstar_exp", args.dstar_exp}});
    }
    return 0;
}

struct DduArgs {
    std::string coverage;
    std::string out;
};

int run_ddu(const DduArgs& args) {
    const auto matrix = floc::parse_coverage(args.coverage);
    const auto result = floc::ddu(matrix);
    std::ostringstream out;
    out << "density,diversity,uniqueness,ddu\n"
        << format_double(result.density) << ',' << format_double(result.diversity) << ','
        << format_double(result.uniqueness) << ',' << format_double(result.ddu) << '\n';
    emit(out.str(), args.out);
    if (!args.out.empty()) {
        write_manifest(args.out, "ddu", json{{"coverage", args.coverage}});
    }
    return 0;
}

struct MetricsChangeArgs {
    std::string log;
    std::string paths;
    std::int64_t analysis_time = -1;
    std::string out;
};

int run_metrics_change(const MetricsChangeArgs& args) {
    const auto log = floc::read_commit_log(args.log);
    const auto class_paths = floc::read_class_paths(args.paths);
    std::int64_t analysis_time = args.analysis_time;
    if (analysis_time < 0) {
        analysis_time = 0;
        for (const auto& record : log) analysis_time = std::max(analysis_time, record.timestamp);
    }
    std::vector<std::string> warnings;
    const auto table = floc::extract_change_metrics(log, class_paths, analysis_time, &warnings);
    warn_all(warnings);
    std::ostringstream out;
    floc::write_metric_table(table, out);
    emit(out.str(), args.out);
    if (!args.out.empty()) {
        write_manifest(args.out, "metrics change",
                       json{{"log", args.log},
                            {"paths", args.paths},
                            {"analysis_time", analysis_time}});
    }
    return 0;
}

struct MetricsScanArgs {
    std::string root;
    std::string paths;
    std::string family = "size";
    std::string catalog;
    std::string out;
};

int run_metrics_scan(const MetricsScanArgs& args) {
    const auto class_paths = floc::read_class_paths(args.paths);
    const auto family = floc::parse_family(args.family);
    floc::MetricTable table;
    if (family == floc::MetricFamily::Size) {
        table = floc::scan_size_metrics(args.root, class_paths);
    } else if (family == floc::MetricFamily::Flakiness) {
        const auto catalog = args.catalog.empty() ? floc::default_pattern_catalog()
                                                  : floc::read_pattern_catalog(args.catalog);
        table = floc::scan_flakiness_metrics(args.root, class_paths, catalog);
    } else {
        throw floc::ValidationError("metrics scan supports families 'size' and 'flakiness'");
    }
    std::ostringstream out;
    floc::write_metric_table(table, out);
    emit(out.str(), args.out);
    if (!args.out.empty()) {
        write_manifest(args.out, "metrics scan",
                       json{{"root", args.root},
                            {"paths", args.paths},
                            {"family", args.family},
                            {"catalog", args.catalog}});
    }
    return 0;
}

struct EvolveArgs {
    std::string dataset;
    std::string features = "sbfl";
    floc::GPConfig config;
    std::uint64_t seed = 0;
    double dstar_exp = 2.0;
    bool refit = false;
    std::string out = "models.jsonl";
};

int run_evolve(const EvolveArgs& args) {
    floc::GPConfig config = args.config;
    config.feature_set = args.features;
    config.validate();

    const auto dataset = floc::load_dataset(args.dataset);
    const auto training = floc::to_training(dataset, args.features, args.dstar_exp);
    if (!args.refit && static_cast<int>(training.size()) < config.folds) {
        throw floc::ValidationError("dataset has " + std::to_string(training.size()) +
                                    " commits but " + std::to_string(config.folds) +
                                    " folds were requested");
    }

    std::vector<floc::EvolvedModel> models;
    for (int s = 0; s < config.seeds; ++s) {
        const std::uint64_t run_seed = floc::derive_seed(args.seed, static_cast<std::uint64_t>(s));
        std::cerr << "evolve: seed " << s + 1 << "/" << config.seeds << "\n";
        if (args.refit) {
            auto model = floc::evolve(training, config, run_seed);
            model.seed = static_cast<std::uint64_t>(s);
            models.push_back(std::move(model));
        } else {
            auto fold_models = floc::cross_validate(training, config, run_seed);
            for (auto& model : fold_models) {
                model.seed = static_cast<std::uint64_t>(s);
                models.push_back(std::move(model));
            }
        }
    }

    std::ostringstream out;
    floc::write_model_bundle(models, out);
    floc::csv::write_file(args.out, out.str());

    const auto& median = floc::select_median(models);
    json median_obj{{"expression", floc::expression_to_string(median.expr)},
                    {"feature_set", median.feature_set},
                    {"seed", median.seed},
                    {"fold", median.fold},
                    {"fitness", median.fitness}};
    std::filesystem::path median_path = args.out;
    median_path += ".median.json";
    floc::csv::write_file(median_path, median_obj.dump(2) + "\n");

    write_manifest(args.out, "evolve",
                   json{{"dataset", args.dataset},
                        {"features", args.features},
                        {"population", config.population},
                        {"generations", config.generations},
                        {"seeds", config.seeds},
                        {"folds", config.folds},
                        {"max_depth", config.max_depth},
                        {"tournament_size", config.tournament_size},
                        {"crossover_rate", config.crossover_rate},
                        {"mutation_rate", config.mutation_rate},
                        {"refit", args.refit},
                        {"seed", args.seed}});
    return 0;
}

struct VoteArgs {
    std::vector<std::string> bundles;
    std::string coverage;
    std::string change;
    std::string size;
    std::string flakiness;
    int top_n = 10;
    double dstar_exp = 2.0;
    std::string out;
};

int run_vote(const VoteArgs& args) {
    std::vector<floc::EvolvedModel> models;
    for (const auto& bundle : args.bundles) {
        auto part = floc::read_model_bundle(bundle);
        models.insert(models.end(), std::make_move_iterator(part.begin()),
                      std::make_move_iterator(part.end()));
    }

    const auto matrix = floc::parse_coverage(args.coverage);
    std::vector<floc::MetricTable> tables;
    if (!args.change.empty()) {
        tables.push_back(floc::ingest_metric_table(args.change, floc::MetricFamily::Change));
    }
    if (!args.size.empty()) {
        tables.push_back(floc::ingest_metric_table(args.size, floc::MetricFamily::Size));
    }
    if (!args.flakiness.empty()) {
        tables.push_back(
            floc::ingest_metric_table(args.flakiness, floc::MetricFamily::Flakiness));
    }
    std::vector<const floc::MetricTable*> table_ptrs;
    for (const auto& table : tables) table_ptrs.push_back(&table);

    std::vector<std::string> warnings;
    const auto features =
        floc::normalize(floc::build_features(matrix, table_ptrs, args.dstar_exp, &warnings));
    warn_all(warnings);

    floc::VotingConfig config;
    config.top_n = args.top_n;
    const auto ranking = floc::vote(features, models, config);

    std::ostringstream out;
    floc::write_ranking(ranking, out, /*with_votes=*/true);
    emit(out.str(), args.out);
    if (!args.out.empty()) {
        write_manifest(args.out, "vote",
                       json{{"bundles", args.bundles},
                            {"coverage", args.coverage},
                            {"top_n", args.top_n},
                            {"models", models.size()}});
    }
    return 0;
}

struct EvalArgs {
    std::vector<std::string> rankings;
    std::string truth;
    std::string dataset;
    int top_k = 5;
    std::string out_dir;
};

std::map<std::string, floc::Ranking> load_ranking_dir(const std::filesystem::path& dir) {
    std::map<std::string, floc::Ranking> rankings;
    if (!std::filesystem::is_directory(dir)) {
        throw floc::ParseError("rankings directory not found: " + dir.string());
    }
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".csv") continue;
        rankings.emplace(entry.path().stem().string(), floc::read_ranking(entry.path()));
    }
    if (rankings.empty()) {
        throw floc::ParseError("no ranking CSVs found in " + dir.string());
    }
    return rankings;
}

int run_eval(const EvalArgs& args) {
    const auto truth = floc::read_ground_truth(args.truth);
    const std::filesystem::path out_dir =
        args.out_dir.empty() ? default_out_dir() : std::filesystem::path(args.out_dir);
    std::filesystem::create_directories(out_dir);

    std::map<std::string, floc::CoverageMatrix> matrices;
    const bool have_dataset = !args.dataset.empty();
    if (have_dataset) {
        const auto dataset = floc::load_dataset(args.dataset);
        for (const auto& commit : dataset.commits) {
            matrices.emplace(commit.commit_id, commit.matrix);
        }
    }

    std::map<std::string, std::map<std::string, floc::Ranking>> by_label;
    std::string primary_label;
    for (const auto& dir : args.rankings) {
        std::string label = std::filesystem::path(dir).filename().string();
        while (by_label.count(label)) label += "+";
        if (primary_label.empty()) primary_label = label;
        by_label.emplace(std::move(label), load_ranking_dir(dir));
    }

    // The first set drives the headline report; extra sets add the overlap.
    const auto& primary = by_label.at(primary_label);
    std::vector<std::string> warnings;
    const auto report =
        floc::build_report(primary, truth, have_dataset ? &matrices : nullptr, &warnings);
    warn_all(warnings);

    std::ostringstream summary;
    floc::write_report_summary_csv(report, summary);
    floc::csv::write_file(out_dir / "summary.csv", summary.str());

    std::ostringstream per_commit;
    floc::write_report_per_commit_csv(report, per_commit);
    floc::csv::write_file(out_dir / "per_commit.csv", per_commit.str());

    std::ostringstream text;
    floc::write_report_text(report, text);
    floc::csv::write_file(out_dir / "report.txt", text.str());

    if (!report.ddu_rows.empty()) {
        std::ostringstream ddu_out;
        floc::write_report_ddu_csv(report, ddu_out);
        floc::csv::write_file(out_dir / "ddu.csv", ddu_out.str());
    }

    if (by_label.size() >= 2) {
        const auto overlap = floc::overlap_report(by_label, truth, args.top_k);
        std::ostringstream overlap_out;
        floc::write_overlap_csv(overlap, overlap_out);
        floc::csv::write_file(out_dir / "overlap.csv", overlap_out.str());
    }

    write_manifest(out_dir / "report", "eval",
                   json{{"rankings", args.rankings},
                        {"truth", args.truth},
                        {"dataset", args.dataset},
                        {"top_k", args.top_k}});
    std::cout << text.str();
    return 0;
}

struct SynthArgs {
    floc::SynthSpec spec;
    std::string signal_metrics = "changes,loc";
    std::string out_dir;
};

int run_synth(const SynthArgs& args) {
    floc::SynthSpec spec = args.spec;
    spec.signal_metrics.clear();
    for (const auto& cell : floc::csv::split_line(args.signal_metrics)) {
        auto metric = floc::csv::trim(cell);
        if (!metric.empty()) spec.signal_metrics.emplace_back(metric);
    }
    const std::filesystem::path out_dir =
        args.out_dir.empty() ? default_out_dir() / "synth" : std::filesystem::path(args.out_dir);
    const auto dataset = floc::generate(spec);
    floc::write_dataset(dataset, out_dir);
    write_manifest(out_dir / "dataset", "synth",
                   json{{"commits", spec.commits},
                        {"tests", spec.tests_per_commit},
                        {"classes", spec.classes_per_commit},
                        {"flaky_fraction", spec.flaky_fraction},
                        {"bias", spec.coverage_bias},
                        {"baseline", spec.baseline_density},
                        {"signal", spec.metric_signal},
                        {"signal_metrics", spec.signal_metrics},
                        {"seed", spec.seed}});
    std::cerr << "synth: wrote " << dataset.commits.size() << " commits to " << out_dir.string()
              << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"floc: flaky-class localisation toolkit"};
    app.set_version_flag("--version", floc::kVersion);
    app.require_subcommand(1);

    RankArgs rank_args;
    auto* rank = app.add_subcommand("rank", "Rank classes of one commit with an SBFL formula");
    rank->add_option("--coverage", rank_args.coverage, "coverage CSV")->required();
    rank->add_option("--formula", rank_args.formula, "ochiai|barinel|tarantula|dstar");
    rank->add_option("--dstar-exp", rank_args.dstar_exp, "DStar exponent (default 2)");
    rank->add_option("-o,--out", rank_args.out, "output ranking CSV (default stdout)");

    DduArgs ddu_args;
    auto* ddu_cmd = app.add_subcommand("ddu", "Diagnosability (DDU) of a coverage matrix");
    ddu_cmd->add_option("--coverage", ddu_args.coverage, "coverage CSV")->required();
    ddu_cmd->add_option("-o,--out", ddu_args.out, "output CSV (default stdout)");

    auto* metrics = app.add_subcommand("metrics", "Metric table extraction");
    metrics->require_subcommand(1);
    MetricsChangeArgs change_args;
    auto* metrics_change =
        metrics->add_subcommand("change", "Change metrics from a commit log");
    metrics_change->add_option("--log", change_args.log, "commit log JSON-lines")->required();
    metrics_change->add_option("--paths", change_args.paths, "class,path CSV")->required();
    metrics_change->add_option("--analysis-time", change_args.analysis_time,
                               "unix seconds (default: newest commit)");
    metrics_change->add_option("-o,--out", change_args.out, "output CSV (default stdout)");

    MetricsScanArgs scan_args;
    auto* metrics_scan = metrics->add_subcommand("scan", "Size or flakiness metrics from source");
    metrics_scan->add_option("--root", scan_args.root, "source root directory")->required();
    metrics_scan->add_option("--paths", scan_args.paths, "class,path CSV")->required();
    metrics_scan->add_option("--family", scan_args.family, "size|flakiness");
    metrics_scan->add_option("--catalog", scan_args.catalog, "pattern catalog file");
    metrics_scan->add_option("-o,--out", scan_args.out, "output CSV (default stdout)");

    EvolveArgs evolve_args;
    auto* evolve_cmd = app.add_subcommand("evolve", "Evolve scoring formulae with GP");
    evolve_cmd->add_option("--dataset", evolve_args.dataset, "dataset directory")->required();
    evolve_cmd->add_option("--features", evolve_args.features,
                           "sbfl|sbfl+flakiness|sbfl+change|sbfl+size");
    evolve_cmd->add_option("--pop", evolve_args.config.population, "population size");
    evolve_cmd->add_option("--gens", evolve_args.config.generations, "generations");
    evolve_cmd->add_option("--seeds", evolve_args.config.seeds, "independent GP runs");
    evolve_cmd->add_option("--folds", evolve_args.config.folds, "cross-validation folds");
    evolve_cmd->add_option("--max-depth", evolve_args.config.max_depth, "expression depth cap");
    evolve_cmd->add_option("--tournament", evolve_args.config.tournament_size,
                           "tournament size");
    evolve_cmd->add_option("--cx-rate", evolve_args.config.crossover_rate, "crossover rate");
    evolve_cmd->add_option("--mut-rate", evolve_args.config.mutation_rate, "mutation rate");
    evolve_cmd->add_option("--dstar-exp", evolve_args.dstar_exp, "DStar exponent");
    evolve_cmd->add_option("--seed", evolve_args.seed, "global seed");
    evolve_cmd->add_flag("--refit", evolve_args.refit,
                         "train each seed on the full dataset instead of CV folds");
    evolve_cmd->add_option("-o,--out", evolve_args.out, "model bundle file");

    VoteArgs vote_args;
    auto* vote_cmd = app.add_subcommand("vote", "Ensemble-vote a model bundle on one commit");
    vote_cmd->add_option("--bundle", vote_args.bundles, "model bundle (repeatable)")->required();
    vote_cmd->add_option("--coverage", vote_args.coverage, "coverage CSV")->required();
    vote_cmd->add_option("--change", vote_args.change, "change metrics CSV");
    vote_cmd->add_option("--size", vote_args.size, "size metrics CSV");
    vote_cmd->add_option("--flakiness", vote_args.flakiness, "flakiness metrics CSV");
    vote_cmd->add_option("--top-n", vote_args.top_n, "vote cutoff (default 10)");
    vote_cmd->add_option("--dstar-exp", vote_args.dstar_exp, "DStar exponent");
    vote_cmd->add_option("-o,--out", vote_args.out, "output ranking CSV (default stdout)");

    EvalArgs eval_args;
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate rankings against ground truth");
    eval_cmd->add_option("--rankings", eval_args.rankings,
                         "directory of <commit>.csv rankings (repeat for overlap)")
        ->required();
    eval_cmd->add_option("--truth", eval_args.truth, "ground truth JSON-lines")->required();
    eval_cmd->add_option("--dataset", eval_args.dataset,
                         "dataset directory (enables R_wef and DDU)");
    eval_cmd->add_option("--top-k", eval_args.top_k, "overlap cutoff (default 5)");
    eval_cmd->add_option("--out-dir", eval_args.out_dir, "report directory (or $FLOC_OUT_DIR)");

    SynthArgs synth_args;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a planted-culprit dataset");
    synth_cmd->add_option("--commits", synth_args.spec.commits, "commit count");
    synth_cmd->add_option("--tests", synth_args.spec.tests_per_commit, "tests per commit");
    synth_cmd->add_option("--classes", synth_args.spec.classes_per_commit, "classes per commit");
    synth_cmd->add_option("--flaky-fraction", synth_args.spec.flaky_fraction,
                          "fraction of flaky tests");
    synth_cmd->add_option("--bias", synth_args.spec.coverage_bias, "culprit coverage bias");
    synth_cmd->add_option("--baseline", synth_args.spec.baseline_density,
                          "baseline coverage density");
    synth_cmd->add_option("--signal", synth_args.spec.metric_signal, "metric signal strength");
    synth_cmd->add_option("--signal-metrics", synth_args.signal_metrics,
                          "comma list from {changes,loc}");
    synth_cmd->add_option("--prefix", synth_args.spec.commit_prefix, "commit id prefix");
    synth_cmd->add_option("--seed", synth_args.spec.seed, "generator seed");
    synth_cmd->add_option("--out-dir", synth_args.out_dir, "dataset directory");

    try {
        app.parse(argc, argv);
        if (*rank) return run_rank(rank_args);
        if (*ddu_cmd) return run_ddu(ddu_args);
        if (*metrics_change) return run_metrics_change(change_args);
        if (*metrics_scan) return run_metrics_scan(scan_args);
        if (*evolve_cmd) return run_evolve(evolve_args);
        if (*vote_cmd) return run_vote(vote_args);
        if (*eval_cmd) return run_eval(eval_args);
        if (*synth_cmd) return run_synth(synth_args);
        std::cerr << "error: no subcommand\n";
        return 1;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    } catch (const floc::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::logic_error& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 2;
    }
}
