#include "screenkit/svm.hpp"

#include "dual_cd.hpp"
#include "screenkit/csv.hpp"
#include "screenkit/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace screenkit {

std::string_view to_string(Loss loss) {
    switch (loss) {
    case Loss::Hinge:
        return "hinge";
    case Loss::CostHinge:
        return "cost_hinge";
    case Loss::Transductive:
        return "transductive";
    case Loss::Auc:
        return "auc";
    case Loss::Kld:
        return "kld";
    case Loss::QuadMean:
        return "quadmean";
    }
    return "?";
}

Loss parse_loss(std::string_view s) {
    for (Loss l : {Loss::Hinge, Loss::CostHinge, Loss::Transductive, Loss::Auc, Loss::Kld, Loss::QuadMean}) {
        if (to_string(l) == s) {
            return l;
        }
    }
    throw UsageError("unknown loss '" + std::string(s) + "'");
}

bool is_multivariate(Loss loss) {
    return loss == Loss::Auc || loss == Loss::Kld || loss == Loss::QuadMean;
}

double default_epsilon(Loss loss) {
    return is_multivariate(loss) ? 0.001 : 0.01;
}

double default_c(const FeatureMatrix& features) {
    if (features.rows() == 0) {
        throw DataError("default_c needs at least one instance");
    }
    double sum = 0.0;
    for (std::size_t r = 0; r < features.rows(); ++r) {
        sum += std::sqrt(features.squared_norm(r));
    }
    const double b = sum / static_cast<double>(features.rows());
    if (!(b > 0.0)) {
        throw DataError("default_c: all feature vectors are zero");
    }
    return 1.0 / (b * b);
}

double resolve_j(std::span<const Label> labels) {
    std::size_t pos = 0;
    for (auto l : labels) {
        pos += is_relevant(l) ? 1 : 0;
    }
    const std::size_t neg = labels.size() - pos;
    if (pos == 0) {
        throw DataError("cannot resolve J: no relevant citations in training labels");
    }
    if (neg == 0) {
        throw DataError("cannot resolve J: no irrelevant citations in training labels");
    }
    return static_cast<double>(neg) / static_cast<double>(pos);
}

namespace detail {

DualSolution solve_dual_cd(const DualProblem& p, std::vector<double> alpha0) {
    const FeatureMatrix& x = *p.x;
    const std::size_t n = x.rows();
    DualSolution s;
    s.w.assign(x.cols(), 0.0);
    s.alpha.assign(n, 0.0);
    if (alpha0.size() == n) {
        for (std::size_t i = 0; i < n; ++i) {
            s.alpha[i] = std::clamp(alpha0[i], 0.0, p.upper[i]);
            if (s.alpha[i] != 0.0) {
                x.axpy(i, s.alpha[i] * p.y[i], s.w);
                if (p.bias) {
                    s.b += s.alpha[i] * p.y[i];
                }
            }
        }
    }
    std::vector<double> qd(n);
    for (std::size_t i = 0; i < n; ++i) {
        qd[i] = x.squared_norm(i) + (p.bias ? 1.0 : 0.0);
    }
    auto objective = [&] {
        double ww = s.b * s.b;
        for (double v : s.w) {
            ww += v * v;
        }
        double sa = 0.0;
        for (double a : s.alpha) {
            sa += a;
        }
        return 0.5 * ww - sa;
    };
    for (s.epochs = 0; s.epochs < p.max_epochs;) {
        double max_pg = -std::numeric_limits<double>::infinity();
        double min_pg = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            const double yi = p.y[i];
            const double g = yi * (x.dot(i, s.w) + s.b) - 1.0;
            const double a = s.alpha[i];
            double pg = g;
            if (a <= 0.0) {
                pg = std::min(g, 0.0);
            } else if (a >= p.upper[i]) {
                pg = std::max(g, 0.0);
            }
            max_pg = std::max(max_pg, pg);
            min_pg = std::min(min_pg, pg);
            if (pg == 0.0) {
                continue;
            }
            double a_new;
            if (qd[i] <= 0.0) {
                a_new = g < 0.0 ? p.upper[i] : 0.0;
            } else {
                a_new = std::clamp(a - g / qd[i], 0.0, p.upper[i]);
            }
            const double d = (a_new - a) * yi;
            if (d != 0.0) {
                x.axpy(i, d, s.w);
                if (p.bias) {
                    s.b += d;
                }
                s.alpha[i] = a_new;
            }
        }
        ++s.epochs;
        s.objective_trace.push_back(objective());
        if (n == 0 || max_pg - min_pg < p.epsilon) {
            s.converged = true;
            break;
        }
    }
    return s;
}

} // namespace detail

namespace {

void check_binary(std::span<const Label> labels, std::size_t rows) {
    if (labels.size() != rows) {
        throw UsageError("labels (" + std::to_string(labels.size()) + ") and feature rows (" + std::to_string(rows) +
                         ") differ");
    }
    bool pos = false, neg = false;
    for (auto l : labels) {
        (is_relevant(l) ? pos : neg) = true;
    }
    if (!pos || !neg) {
        throw DataError("training needs both relevant and irrelevant citations");
    }
}

} // namespace

TrainOutcome train_weighted_hinge(const FeatureMatrix& features, std::span<const Label> labels,
                                  const TrainConfig& config) {
    check_binary(labels, features.rows());
    TrainConfig resolved = config;
    if (!resolved.cost_c) {
        resolved.cost_c = default_c(features);
    }
    if (resolved.loss == Loss::CostHinge) {
        if (!resolved.j_ratio) {
            resolved.j_ratio = resolve_j(labels);
        }
    } else {
        resolved.j_ratio = 1.0;
    }
    if (!resolved.epsilon) {
        resolved.epsilon = default_epsilon(resolved.loss);
    }
    if (!(*resolved.cost_c > 0.0) || !(*resolved.j_ratio > 0.0)) {
        throw UsageError("C and J must be positive");
    }

    const std::size_t n = features.rows();
    std::vector<int> y(n);
    std::vector<double> upper(n);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = sign(labels[i]);
        upper[i] = *resolved.cost_c * (is_relevant(labels[i]) ? *resolved.j_ratio : 1.0);
    }
    detail::DualProblem problem{&features, y, upper, resolved.use_intercept, *resolved.epsilon,
                                resolved.max_iters};
    auto sol = detail::solve_dual_cd(problem);

    TrainOutcome out;
    out.model.weights = std::move(sol.w);
    out.model.intercept = resolved.use_intercept ? sol.b : 0.0;
    out.model.config = resolved;
    out.diagnostics.iterations = sol.epochs;
    out.diagnostics.converged = sol.converged;
    out.diagnostics.objective_trace = std::move(sol.objective_trace);
    if (!sol.converged) {
        std::ostringstream msg;
        msg << "hinge solver reached max_iters=" << resolved.max_iters << " without converging; final objective "
            << out.diagnostics.objective_trace.back();
        out.diagnostics.warnings.push_back(msg.str());
    }
    return out;
}

TrainOutcome train(const FeatureMatrix& features, std::span<const Label> labels, const TrainConfig& config,
                   const FeatureMatrix* unlabeled) {
    switch (config.loss) {
    case Loss::Hinge:
    case Loss::CostHinge:
        return train_weighted_hinge(features, labels, config);
    case Loss::Transductive: {
        const FeatureMatrix empty(features.cols());
        return train_transductive(features, labels, unlabeled ? *unlabeled : empty, config);
    }
    case Loss::Auc:
    case Loss::Kld:
    case Loss::QuadMean:
        return train_multivariate(features, labels, config);
    }
    throw UsageError("unknown loss");
}

std::vector<double> score_citations(const LinearModel& model, const FeatureMatrix& features) {
    if (features.cols() != model.weights.size()) {
        throw DataError("feature dimension " + std::to_string(features.cols()) + " does not match model dimension " +
                        std::to_string(model.weights.size()));
    }
    std::vector<double> s(features.rows());
    for (std::size_t r = 0; r < features.rows(); ++r) {
        s[r] = features.dot(r, model.weights) + model.intercept;
    }
    return s;
}

std::vector<Label> predict(const LinearModel& model, std::span<const double> scores) {
    std::vector<Label> out(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        out[i] = scores[i] >= model.decision_threshold ? Label::Relevant : Label::Irrelevant;
    }
    return out;
}

namespace {

std::string opt_str(const std::optional<double>& v) {
    return v ? csv::format_double(*v) : "auto";
}

std::optional<double> opt_parse(const std::string& s) {
    if (s == "auto") {
        return std::nullopt;
    }
    return csv::parse_double(s);
}

} // namespace

void save_model(const LinearModel& model, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    const auto& c = model.config;
    out << "screenkit-model 1\n";
    out << "loss " << to_string(c.loss) << '\n';
    out << "use_intercept " << (c.use_intercept ? 1 : 0) << '\n';
    out << "c " << opt_str(c.cost_c) << '\n';
    out << "j " << opt_str(c.j_ratio) << '\n';
    out << "epsilon " << opt_str(c.epsilon) << '\n';
    out << "max_iters " << c.max_iters << '\n';
    out << "dim " << model.weights.size() << '\n';
    out << "threshold " << csv::format_double(model.decision_threshold) << '\n';
    out << "intercept " << csv::format_double(model.intercept) << '\n';
    out << "weights\n";
    for (double w : model.weights) {
        out << csv::format_double(w) << '\n';
    }
}

LinearModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open model file: " + path.string());
    }
    std::string line;
    if (!std::getline(in, line) || line != "screenkit-model 1") {
        throw DataError("not a version-1 model file: " + path.string());
    }
    LinearModel m;
    std::size_t dim = 0;
    auto expect = [&](const char* key) {
        if (!std::getline(in, line)) {
            throw DataError(std::string("model file truncated before '") + key + "'");
        }
        const auto sp = line.find(' ');
        if (line.substr(0, sp) != key) {
            throw DataError(std::string("model file: expected '") + key + "', got '" + line + "'");
        }
        return sp == std::string::npos ? std::string() : line.substr(sp + 1);
    };
    m.config.loss = parse_loss(expect("loss"));
    m.config.use_intercept = expect("use_intercept") == "1";
    m.config.cost_c = opt_parse(expect("c"));
    m.config.j_ratio = opt_parse(expect("j"));
    m.config.epsilon = opt_parse(expect("epsilon"));
    m.config.max_iters = std::stoull(expect("max_iters"));
    dim = std::stoull(expect("dim"));
    m.decision_threshold = csv::parse_double(expect("threshold"));
    m.intercept = csv::parse_double(expect("intercept"));
    expect("weights");
    m.weights.reserve(dim);
    while (m.weights.size() < dim && std::getline(in, line)) {
        m.weights.push_back(csv::parse_double(line));
    }
    if (m.weights.size() != dim) {
        throw DataError("model file has " + std::to_string(m.weights.size()) + " weights, header says " +
                        std::to_string(dim));
    }
    return m;
}

} // namespace screenkit
