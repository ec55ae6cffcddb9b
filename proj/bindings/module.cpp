#include "floc/coverage.hpp"
#include "floc/dataset.hpp"
#include "floc/ensemble.hpp"
#include "floc/evaluate.hpp"
#include "floc/evolve.hpp"
#include "floc/features.hpp"
#include "floc/sbfl.hpp"
#include "floc/synth.hpp"
#include "floc/version.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;

namespace {

py::list ranking_to_list(const floc::Ranking& ranking, bool with_votes) {
    py::list out;
    for (const auto& e : ranking.entries) {
        py::dict row;
        row["class"] = e.class_id;
        row["score"] = e.score;
        row["rank"] = e.rank;
        row["best_rank"] = e.best_rank;
        row["tie_group_size"] = e.tie_group_size;
        if (with_votes) row["votes"] = e.votes;
        out.append(std::move(row));
    }
    return out;
}

floc::FeatureMatrix features_from_dict(
    const std::map<std::string, std::map<std::string, double>>& per_class) {
    floc::FeatureMatrix features;
    std::set<std::string> columns;
    for (const auto& [class_id, row] : per_class) {
        features.class_ids.push_back(class_id);
        for (const auto& [name, value] : row) columns.insert(name);
    }
    features.columns.assign(columns.begin(), columns.end());
    for (const auto& class_id : features.class_ids) {
        const auto& row = per_class.at(class_id);
        std::vector<double> values;
        for (const auto& name : features.columns) {
            auto it = row.find(name);
            values.push_back(it == row.end() ? 0.0 : it->second);
        }
        features.values.push_back(std::move(values));
    }
    return features;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Flaky-class localisation: SBFL, GP-evolved formulae, voting, evaluation";
    m.attr("__version__") = floc::kVersion;

    py::register_exception<floc::ParseError>(m, "FlocParseError", PyExc_ValueError);
    py::register_exception<floc::ValidationError>(m, "FlocValidationError", PyExc_ValueError);

    py::class_<floc::CoverageMatrix>(m, "CoverageMatrix")
        .def_readonly("test_ids", &floc::CoverageMatrix::test_ids)
        .def_readonly("class_ids", &floc::CoverageMatrix::class_ids)
        .def_property_readonly("outcomes",
                               [](const floc::CoverageMatrix& matrix) {
                                   std::vector<std::string> labels;
                                   for (auto o : matrix.outcome) {
                                       labels.push_back(o == floc::Outcome::Flaky ? "flaky"
                                                                                  : "stable");
                                   }
                                   return labels;
                               })
        .def_property_readonly("activity",
                               [](const floc::CoverageMatrix& matrix) {
                                   std::vector<std::vector<int>> rows;
                                   for (const auto& row : matrix.activity) {
                                       rows.emplace_back(row.begin(), row.end());
                                   }
                                   return rows;
                               })
        .def("__repr__", [](const floc::CoverageMatrix& matrix) {
            return "<CoverageMatrix " + std::to_string(matrix.test_count()) + " tests x " +
                   std::to_string(matrix.class_count()) + " classes>";
        });

    m.def("parse_coverage",
          [](const std::filesystem::path& file) { return floc::parse_coverage(file); },
          py::arg("file"), "Parse a coverage CSV (test,outcome,<classes...>).");

    m.def("spectrum_counts",
          [](const floc::CoverageMatrix& matrix) {
              std::map<std::string, std::tuple<int, int, int, int>> out;
              for (const auto& [class_id, c] : floc::spectrum_counts(matrix)) {
                  out[class_id] = {c.e_f, c.e_s, c.n_f, c.n_s};
              }
              return out;
          },
          py::arg("matrix"), "Per-class (e_f, e_s, n_f, n_s).");

    m.def("covered_by_flaky",
          [](const floc::CoverageMatrix& matrix) { return floc::covered_by_flaky(matrix); },
          py::arg("matrix"));

    m.def("score",
          [](int e_f, int e_s, int n_f, int n_s, const std::string& formula, double dstar_exp) {
              return floc::score(floc::SpectrumCounts{e_f, e_s, n_f, n_s},
                                 floc::parse_formula(formula, dstar_exp));
          },
          py::arg("e_f"), py::arg("e_s"), py::arg("n_f"), py::arg("n_s"),
          py::arg("formula") = "ochiai", py::arg("dstar_exp") = 2.0,
          "Suspiciousness of one spectrum under one formula.");

    m.def("rank_classes",
          [](const std::map<std::string, double>& scores) {
              return ranking_to_list(floc::rank_classes(scores), false);
          },
          py::arg("scores"), "Max tie-breaker ranking of a class->score map.");

    m.def("localise",
          [](const floc::CoverageMatrix& matrix, const std::string& formula, double dstar_exp) {
              return ranking_to_list(
                  floc::localise(matrix, floc::parse_formula(formula, dstar_exp)), false);
          },
          py::arg("matrix"), py::arg("formula") = "ochiai", py::arg("dstar_exp") = 2.0);

    m.def("ddu",
          [](const floc::CoverageMatrix& matrix) {
              const auto r = floc::ddu(matrix);
              py::dict out;
              out["density"] = r.density;
              out["diversity"] = r.diversity;
              out["uniqueness"] = r.uniqueness;
              out["ddu"] = r.ddu;
              return out;
          },
          py::arg("matrix"), "Density', diversity, uniqueness and their product.");

    m.def("wef",
          [](const std::map<std::string, double>& scores, const std::string& flaky) {
              return floc::wef(scores, flaky);
          },
          py::arg("scores"), py::arg("flaky_class"), "Wasted effort before the flaky class.");

    m.def("r_wef",
          [](double wef_value, int covered) { return floc::r_wef(wef_value, covered); },
          py::arg("wef"), py::arg("covered"),
          "Relative wasted effort against the flaky-coverage baseline, in (0, 100].");

    m.def("evaluate_expression",
          [](const std::string& expression,
             const std::map<std::string, std::map<std::string, double>>& features) {
              return floc::evaluate_expression(floc::parse_expression(expression),
                                               features_from_dict(features));
          },
          py::arg("expression"), py::arg("features"),
          "Evaluate a prefix-notation formula (e.g. add(ochiai,sqrt(loc))) per class.");

    m.def("vote_rankings",
          [](const std::vector<std::map<std::string, double>>& model_scores, int top_n) {
              std::vector<floc::Ranking> rankings;
              rankings.reserve(model_scores.size());
              for (const auto& scores : model_scores) {
                  rankings.push_back(floc::rank_classes(scores));
              }
              return ranking_to_list(floc::aggregate_votes(rankings, top_n), true);
          },
          py::arg("model_scores"), py::arg("top_n") = 10,
          "Fractional top-N voting across per-model score maps.");

    m.def("generate_synth",
          [](const std::filesystem::path& out_dir, int commits, int tests, int classes,
             double flaky_fraction, double bias, double baseline, double signal,
             const std::vector<std::string>& signal_metrics, std::uint64_t seed) {
              floc::SynthSpec spec;
              spec.commits = commits;
              spec.tests_per_commit = tests;
              spec.classes_per_commit = classes;
              spec.flaky_fraction = flaky_fraction;
              spec.coverage_bias = bias;
              spec.baseline_density = baseline;
              spec.metric_signal = signal;
              spec.signal_metrics = signal_metrics;
              spec.seed = seed;
              floc::write_dataset(floc::generate(spec), out_dir);
          },
          py::arg("out_dir"), py::arg("commits") = 20, py::arg("tests") = 40,
          py::arg("classes") = 60, py::arg("flaky_fraction") = 0.2, py::arg("bias") = 0.6,
          py::arg("baseline") = 0.2, py::arg("signal") = 0.0,
          py::arg("signal_metrics") = std::vector<std::string>{"changes", "loc"},
          py::arg("seed") = 0, "Write a planted-culprit dataset to out_dir.");
}
