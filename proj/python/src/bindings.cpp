#include "screenkit/active.hpp"
#include "screenkit/cli.hpp"
#include "screenkit/error.hpp"
#include "screenkit/metrics.hpp"
#include "screenkit/relrank.hpp"
#include "screenkit/stats.hpp"
#include "screenkit/svm.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

namespace py = pybind11;
using namespace screenkit;

namespace {

// Python passes labels as +1 / -1 integers.
std::vector<Label> to_labels(const std::vector<int>& y) {
    std::vector<Label> out;
    out.reserve(y.size());
    for (int v : y) {
        if (v != 1 && v != -1) {
            throw UsageError("labels must be 1 or -1, got " + std::to_string(v));
        }
        out.push_back(v == 1 ? Label::Relevant : Label::Irrelevant);
    }
    return out;
}

FeatureMatrix to_matrix(const py::array_t<double, py::array::c_style | py::array::forcecast>& x) {
    if (x.ndim() != 2) {
        throw UsageError("features must be a 2-d array");
    }
    const auto rows = static_cast<std::size_t>(x.shape(0));
    const auto cols = static_cast<std::size_t>(x.shape(1));
    return FeatureMatrix::from_dense(std::span<const double>(x.data(), rows * cols), rows, cols);
}

void check_lengths(std::size_t a, std::size_t b) {
    if (a != b) {
        throw UsageError("scores and labels differ in length (" + std::to_string(a) + " vs " + std::to_string(b) +
                         ")");
    }
}

py::dict metric_dict(const MetricReport& r) {
    py::dict d;
    for (auto m : kAllMetrics) {
        d[py::str(std::string(to_string(m)))] = r[m] ? py::cast(*r[m]) : py::none();
    }
    return d;
}

} // namespace

PYBIND11_MODULE(_screenkit, m) {
    m.doc() = "Citation screening with imbalance-aware linear classifiers";
    m.attr("__version__") = std::string(cli::kVersion);

    py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
    py::register_exception<DataError>(m, "DataError", PyExc_RuntimeError);

    py::class_<Corpus>(m, "Corpus")
        .def_property_readonly("name", &Corpus::name)
        .def("__len__", &Corpus::size)
        .def_property_readonly("ids",
                               [](const Corpus& c) {
                                   std::vector<std::string> ids;
                                   for (const auto& x : c.citations()) {
                                       ids.push_back(x.id);
                                   }
                                   return ids;
                               })
        .def_property_readonly("labels",
                               [](const Corpus& c) {
                                   std::vector<std::optional<int>> out;
                                   for (const auto& x : c.citations()) {
                                       out.push_back(x.label ? std::optional<int>(sign(*x.label)) : std::nullopt);
                                   }
                                   return out;
                               })
        .def_property_readonly("relevant_count", &Corpus::relevant_count)
        .def_property_readonly("labeled_count", &Corpus::labeled_count)
        .def("prevalence", [](const Corpus& c) {
            const auto p = prevalence(c);
            return py::make_tuple(p.fraction, std::string(to_string(p.group)));
        });

    m.def(
        "load_corpus",
        [](const std::filesystem::path& path, const std::string& label_field) {
            const auto format = path.extension() == ".csv" ? CorpusFormat::Csv : CorpusFormat::Jsonl;
            return load_corpus(path, format, label_field);
        },
        py::arg("path"), py::arg("label_field") = "label", "Read a JSONL or CSV corpus (format by extension).");
    m.def("prevalence_group", [](double f) { return std::string(to_string(prevalence_group(f))); },
          py::arg("fraction"));

    m.def(
        "ranking_auc",
        [](const std::vector<double>& s, const std::vector<int>& y) {
            check_lengths(s.size(), y.size());
            return ranking_auc(s, to_labels(y));
        },
        py::arg("scores"), py::arg("labels"), "Pairwise AUC, ties one half; None unless both classes occur.");
    m.def(
        "ranking_auprc",
        [](const std::vector<double>& s, const std::vector<int>& y) {
            check_lengths(s.size(), y.size());
            return ranking_auprc(s, to_labels(y));
        },
        py::arg("scores"), py::arg("labels"));
    m.def(
        "evaluate",
        [](const std::vector<double>& s, const std::vector<int>& y, double threshold, std::size_t train_pos,
           std::size_t train_neg) {
            check_lengths(s.size(), y.size());
            const auto labels = to_labels(y);
            return metric_dict(evaluate({s, labels, threshold, train_pos, train_neg}));
        },
        py::arg("scores"), py::arg("labels"), py::arg("threshold") = 0.0, py::arg("train_positives") = 0,
        py::arg("train_negatives") = 0, "All eleven metrics; undefined ones are None.");

    m.def(
        "train",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& x, const std::vector<int>& y,
           const std::string& loss, bool use_intercept, std::optional<double> c) {
            TrainConfig cfg;
            cfg.loss = parse_loss(loss);
            cfg.use_intercept = use_intercept;
            cfg.cost_c = c;
            const auto features = to_matrix(x);
            if (features.rows() != y.size()) {
                throw UsageError("features and labels differ in length");
            }
            const auto out = train(features, to_labels(y), cfg);
            py::dict d;
            d["weights"] = out.model.weights;
            d["intercept"] = out.model.intercept;
            d["threshold"] = out.model.decision_threshold;
            d["iterations"] = out.diagnostics.iterations;
            d["converged"] = out.diagnostics.converged;
            d["warnings"] = out.diagnostics.warnings;
            return d;
        },
        py::arg("features"), py::arg("labels"), py::arg("loss") = "hinge", py::arg("use_intercept") = true,
        py::arg("c") = py::none(), "Train a linear model on dense features; returns weights and diagnostics.");

    m.def(
        "combined_scores",
        [](const std::vector<std::vector<double>>& member_scores, const std::vector<double>& thresholds,
           double st, double mr) {
            const auto c = generate_combined_score(member_scores, thresholds, st, mr);
            std::vector<py::dict> out;
            for (const auto& x : c) {
                py::dict d;
                d["score"] = x.score;
                d["nv"] = x.nv;
                d["fv"] = x.fv;
                d["rs"] = x.rs;
                d["ns"] = x.ns;
                out.push_back(d);
            }
            return out;
        },
        py::arg("member_scores"), py::arg("thresholds") = std::vector<double>{},
        py::arg("separation_threshold") = 1000.0, py::arg("max_range") = 800.0,
        "RelRank vote/rank fusion; member_scores is members x citations.");
    m.def("assign_stars", [](double score) { return assign_stars(score, EnsembleConfig{}); }, py::arg("score"));

    m.def(
        "paired_t_test",
        [](const std::vector<double>& a, const std::vector<double>& b) {
            const auto r = paired_t_test(a, b);
            return py::make_tuple(r.t, r.p);
        },
        py::arg("a"), py::arg("b"), "Two-sided paired t-test on a - b; returns (t, p).");
    m.def("lsu_select", [](const std::vector<double>& p, double alpha) { return lsu_select(p, alpha); },
          py::arg("p_values"), py::arg("alpha") = 0.05);
    m.def(
        "equivalence_groups",
        [](const std::vector<int>& ids, const std::vector<std::vector<std::optional<double>>>& values, double alpha,
           bool lower_is_better) {
            const auto g = equivalence_groups(ids, values, alpha, lower_is_better);
            std::vector<std::vector<int>> out;
            for (const auto& grp : g.groups) {
                out.push_back(grp.methods);
            }
            return out;
        },
        py::arg("method_ids"), py::arg("values"), py::arg("alpha") = 0.05, py::arg("lower_is_better") = false,
        "Rank groups of method ids; values[m][d] is method m's mean on dataset d (None when undefined).");
    m.def(
        "anova_two_factor",
        [](const std::vector<std::string>& datasets, const std::vector<int>& methods,
           const std::vector<double>& values) {
            if (datasets.size() != methods.size() || datasets.size() != values.size()) {
                throw UsageError("datasets, methods and values differ in length");
            }
            std::vector<AnovaObservation> obs;
            for (std::size_t i = 0; i < values.size(); ++i) {
                obs.push_back({datasets[i], methods[i], values[i]});
            }
            const auto r = anova_two_factor(obs);
            py::dict d;
            d["method_f"] = r.method_f;
            d["method_p"] = r.method_p;
            d["data_f"] = r.data_f;
            d["data_p"] = r.data_p;
            d["residual_ss"] = r.residual_ss;
            return d;
        },
        py::arg("datasets"), py::arg("methods"), py::arg("values"));

    m.def(
        "screened_histogram",
        [](const std::vector<double>& f) {
            const auto h = screened_histogram(f);
            return std::vector<std::size_t>(h.begin(), h.end());
        },
        py::arg("fractions"), "Counts per 10%-wide bin; 1.0 falls in the top bin.");

    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out, err;
            int code = 0;
            {
                py::gil_scoped_release release;
                code = cli::dispatch(args, out, err);
            }
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Run one screenkit command line; returns (exit_code, stdout, stderr).");
}
