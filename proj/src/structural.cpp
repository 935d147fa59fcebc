#include "screenkit/error.hpp"
#include "screenkit/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace screenkit {

std::optional<StructuredLoss> structured_loss(Loss loss) {
    switch (loss) {
    case Loss::Auc:
        return StructuredLoss::Auc;
    case Loss::Kld:
        return StructuredLoss::Kld;
    case Loss::QuadMean:
        return StructuredLoss::QuadMean;
    default:
        return std::nullopt;
    }
}

double contingency_loss(const ContingencyTable& t, StructuredLoss loss) {
    const double n = static_cast<double>(t.total());
    if (t.total() == 0) {
        throw DataError("contingency loss of an empty table");
    }
    const double p = static_cast<double>(t.positives());
    const double q = static_cast<double>(t.negatives());
    switch (loss) {
    case StructuredLoss::Error:
        return static_cast<double>(t.fp + t.fn) / n;
    case StructuredLoss::QuadMean:
    case StructuredLoss::Am: {
        if (t.positives() == 0 || t.negatives() == 0) {
            throw DataError("recall-based loss needs both classes present");
        }
        const double lrp = static_cast<double>(t.fn) / p;
        const double lrn = static_cast<double>(t.fp) / q;
        return loss == StructuredLoss::Am ? (lrp + lrn) / 2.0 : std::sqrt((lrp * lrp + lrn * lrn) / 2.0);
    }
    case StructuredLoss::Kld: {
        const double eps = 1.0 / (2.0 * n);
        auto smooth = [&](double count) { return (count / n + eps) / (1.0 + 2.0 * eps); };
        const double true_pos = smooth(p), true_neg = smooth(q);
        const double pred_pos = smooth(static_cast<double>(t.tp + t.fp));
        const double pred_neg = smooth(static_cast<double>(t.tn + t.fn));
        const double kl = true_pos * std::log(true_pos / pred_pos) + true_neg * std::log(true_neg / pred_neg);
        return std::max(kl, 0.0);
    }
    case StructuredLoss::Auc:
        break;
    }
    throw UsageError("AUC is not a contingency loss");
}

namespace {

MostViolated most_violated_auc(std::span<const double> s, std::span<const Label> y) {
    std::vector<double> neg_scores;
    std::vector<double> pos_scores;
    for (std::size_t i = 0; i < s.size(); ++i) {
        (is_relevant(y[i]) ? pos_scores : neg_scores).push_back(s[i]);
    }
    std::sort(neg_scores.begin(), neg_scores.end());
    std::sort(pos_scores.begin(), pos_scores.end());
    const double pairs = static_cast<double>(pos_scores.size()) * static_cast<double>(neg_scores.size());

    // A (relevant i, irrelevant j) pair is swapped when 1 - (s_i - s_j) > 0,
    // i.e. s_j > s_i - 1.
    MostViolated mv;
    mv.coefficients.assign(s.size(), 0.0);
    double dot = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        std::size_t count;
        if (is_relevant(y[i])) {
            auto it = std::upper_bound(neg_scores.begin(), neg_scores.end(), s[i] - 1.0);
            count = static_cast<std::size_t>(neg_scores.end() - it);
            mv.swapped_pairs += count;
            mv.coefficients[i] = static_cast<double>(count) / pairs;
        } else {
            auto it = std::lower_bound(pos_scores.begin(), pos_scores.end(), s[i] + 1.0);
            count = static_cast<std::size_t>(it - pos_scores.begin());
            mv.coefficients[i] = -static_cast<double>(count) / pairs;
        }
        dot += mv.coefficients[i] * s[i];
    }
    mv.loss = static_cast<double>(mv.swapped_pairs) / pairs;
    mv.violation = mv.loss - dot;
    return mv;
}

MostViolated most_violated_contingency(std::span<const double> s, std::span<const Label> y, StructuredLoss loss) {
    const std::size_t n = s.size();
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < n; ++i) {
        (is_relevant(y[i]) ? pos : neg).push_back(i);
    }
    // Relevant instances flip lowest score first, irrelevant highest first.
    std::stable_sort(pos.begin(), pos.end(), [&](auto a, auto b) { return s[a] < s[b]; });
    std::stable_sort(neg.begin(), neg.end(), [&](auto a, auto b) { return s[a] > s[b]; });
    const std::size_t P = pos.size(), N = neg.size();
    std::vector<double> pos_prefix(P + 1, 0.0), neg_prefix(N + 1, 0.0);
    for (std::size_t k = 0; k < P; ++k) {
        pos_prefix[k + 1] = pos_prefix[k] + s[pos[k]];
    }
    for (std::size_t k = 0; k < N; ++k) {
        neg_prefix[k + 1] = neg_prefix[k] + s[neg[k]];
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    double best = -std::numeric_limits<double>::infinity();
    std::size_t best_fn = 0, best_fp = 0;
    double best_loss = 0.0;
    for (std::size_t fn = 0; fn <= P; ++fn) {
        for (std::size_t fp = 0; fp <= N; ++fp) {
            const ContingencyTable t{P - fn, fp, N - fp, fn};
            const double l = contingency_loss(t, loss);
            const double v = l - inv_n * pos_prefix[fn] + inv_n * neg_prefix[fp];
            if (v > best) {
                best = v;
                best_fn = fn;
                best_fp = fp;
                best_loss = l;
            }
        }
    }
    MostViolated mv;
    mv.labeling.assign(y.begin(), y.end());
    mv.coefficients.assign(n, 0.0);
    for (std::size_t k = 0; k < best_fn; ++k) {
        mv.labeling[pos[k]] = Label::Irrelevant;
        mv.coefficients[pos[k]] = inv_n;
    }
    for (std::size_t k = 0; k < best_fp; ++k) {
        mv.labeling[neg[k]] = Label::Relevant;
        mv.coefficients[neg[k]] = -inv_n;
    }
    mv.loss = best_loss;
    mv.violation = best;
    return mv;
}

} // namespace

MostViolated find_most_violated(std::span<const double> scores, std::span<const Label> labels, StructuredLoss loss) {
    if (scores.size() != labels.size()) {
        throw UsageError("scores and labels differ in length");
    }
    const auto relevant = std::count(labels.begin(), labels.end(), Label::Relevant);
    if (relevant == 0 || static_cast<std::size_t>(relevant) == labels.size()) {
        throw DataError("most-violated search needs both classes present");
    }
    if (loss == StructuredLoss::Auc) {
        return most_violated_auc(scores, labels);
    }
    return most_violated_contingency(scores, labels, loss);
}

namespace {

/// Euclidean projection onto {a >= 0, sum(a) <= radius}.
void project_capped_simplex(std::vector<double>& a, double radius) {
    double sum = 0.0;
    for (auto& v : a) {
        v = std::max(v, 0.0);
        sum += v;
    }
    if (sum <= radius) {
        return;
    }
    std::vector<double> u = a;
    std::sort(u.begin(), u.end(), std::greater<>());
    double cumulative = 0.0, theta = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        cumulative += u[k];
        const double t = (cumulative - radius) / static_cast<double>(k + 1);
        if (u[k] - t > 0.0) {
            theta = t;
        }
    }
    for (auto& v : a) {
        v = std::max(v - theta, 0.0);
    }
}

/// Working-set dual: maximize a.delta - 0.5 a'Ga over {a >= 0, sum a <= C}.
class WorkingSetQp {
public:
    explicit WorkingSetQp(double c) : c_(c) {}

    void add(double delta, std::vector<double> gram_row) {
        delta_.push_back(delta);
        for (std::size_t k = 0; k + 1 < gram_row.size(); ++k) {
            gram_[k].push_back(gram_row[k]);
        }
        gram_.push_back(std::move(gram_row));
        alpha_.push_back(0.0);
    }

    double objective(const std::vector<double>& a) const {
        double lin = 0.0, quad = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            lin += a[i] * delta_[i];
            double row = 0.0;
            for (std::size_t j = 0; j < a.size(); ++j) {
                row += gram_[i][j] * a[j];
            }
            quad += a[i] * row;
        }
        return lin - 0.5 * quad;
    }

    /// Accelerated projected gradient ascent from the previous solution; the
    /// returned iterate never has a lower objective than the warm start.
    void solve(double tolerance, std::size_t max_steps) {
        const std::size_t m = alpha_.size();
        double lipschitz = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            double row = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                row += std::abs(gram_[i][j]);
            }
            lipschitz = std::max(lipschitz, row);
        }
        if (lipschitz <= 0.0) {
            lipschitz = 1.0;
        }
        const double step = 1.0 / lipschitz;
        std::vector<double> x = alpha_, y = alpha_, x_prev = alpha_, grad(m), next(m);
        double best = objective(alpha_);
        double t = 1.0;
        for (std::size_t it = 0; it < max_steps; ++it) {
            gradient(y, grad);
            for (std::size_t i = 0; i < m; ++i) {
                next[i] = y[i] + step * grad[i];
            }
            project_capped_simplex(next, c_);
            x_prev.swap(x);
            x = next;
            const double f = objective(x);
            if (f > best) {
                best = f;
                alpha_ = x;
            }
            // Restart momentum when the objective drops.
            if (f < objective(x_prev)) {
                t = 1.0;
                y = x;
            } else {
                const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
                for (std::size_t i = 0; i < m; ++i) {
                    y[i] = x[i] + ((t - 1.0) / t_next) * (x[i] - x_prev[i]);
                }
                t = t_next;
            }
            if (it % 10 == 9 && frank_wolfe_gap(alpha_) <= tolerance) {
                break;
            }
        }
    }

    /// Upper bound on (optimum - objective(a)).
    double frank_wolfe_gap(const std::vector<double>& a) const {
        std::vector<double> grad(a.size());
        gradient(a, grad);
        double top = 0.0, inner = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            top = std::max(top, grad[i]);
            inner += grad[i] * a[i];
        }
        return c_ * top - inner;
    }

    const std::vector<double>& alpha() const { return alpha_; }
    double value() const { return objective(alpha_); }

private:
    void gradient(const std::vector<double>& a, std::vector<double>& g) const {
        for (std::size_t i = 0; i < a.size(); ++i) {
            double row = 0.0;
            for (std::size_t j = 0; j < a.size(); ++j) {
                row += gram_[i][j] * a[j];
            }
            g[i] = delta_[i] - row;
        }
    }

    double c_;
    std::vector<double> delta_;
    std::vector<std::vector<double>> gram_;
    std::vector<double> alpha_;
};

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

} // namespace

TrainOutcome train_multivariate(const FeatureMatrix& features, std::span<const Label> labels,
                                const TrainConfig& config) {
    const auto sloss = structured_loss(config.loss);
    if (!sloss) {
        throw UsageError("train_multivariate needs loss auc, kld or quadmean");
    }
    if (labels.size() != features.rows()) {
        throw UsageError("labels and feature rows differ");
    }
    const auto relevant = std::count(labels.begin(), labels.end(), Label::Relevant);
    if (relevant == 0 || static_cast<std::size_t>(relevant) == labels.size()) {
        throw DataError("training needs both relevant and irrelevant citations");
    }
    TrainConfig resolved = config;
    const std::size_t n = features.rows();
    if (!resolved.cost_c) {
        resolved.cost_c = static_cast<double>(n) * default_c(features);
    }
    if (!resolved.epsilon) {
        resolved.epsilon = default_epsilon(resolved.loss);
    }
    resolved.j_ratio = 1.0;
    const double C = *resolved.cost_c;
    const double eps = *resolved.epsilon;
    if (!(C > 0.0)) {
        throw UsageError("C must be positive");
    }

    // The intercept is the weight of an implicit constant feature (last slot).
    const std::size_t d = features.cols() + (resolved.use_intercept ? 1 : 0);
    std::vector<double> w(d, 0.0);
    std::vector<std::vector<double>> constraints;
    std::vector<double> losses;
    WorkingSetQp qp(C);

    auto scores_of = [&](const std::vector<double>& weights) {
        std::vector<double> s(n);
        const double b = resolved.use_intercept ? weights[d - 1] : 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            s[r] = features.dot(r, weights) + b;
        }
        return s;
    };

    TrainOutcome out;
    auto& diag = out.diagnostics;
    double best_primal = std::numeric_limits<double>::infinity();
    double slack = 0.0;
    MostViolated mv;
    for (std::size_t iter = 0;; ++iter) {
        const auto s = scores_of(w);
        mv = find_most_violated(s, labels, *sloss);
        slack = 0.0;
        for (std::size_t c = 0; c < constraints.size(); ++c) {
            slack = std::max(slack, losses[c] - dot(w, constraints[c]));
        }
        const double ww = dot(w, w);
        best_primal = std::min(best_primal, 0.5 * ww + C * std::max(mv.violation, 0.0));
        const double dual = constraints.empty() ? 0.0 : qp.value();
        diag.gap_trace.push_back(std::max(best_primal - dual, 0.0));
        diag.excess_violation_trace.push_back(mv.violation - slack);
        diag.iterations = iter;
        if (mv.violation <= slack + eps) {
            diag.converged = true;
            break;
        }
        if (iter >= resolved.max_iters) {
            std::ostringstream msg;
            msg << "cutting plane reached max_iters=" << resolved.max_iters << " with violation "
                << mv.violation - slack << " above slack";
            diag.warnings.push_back(msg.str());
            break;
        }
        std::vector<double> g(d, 0.0);
        double g_bias = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            if (mv.coefficients[r] != 0.0) {
                features.axpy(r, mv.coefficients[r], g);
                g_bias += mv.coefficients[r];
            }
        }
        if (resolved.use_intercept) {
            g[d - 1] = g_bias;
        }
        std::vector<double> gram_row(constraints.size() + 1);
        for (std::size_t c = 0; c < constraints.size(); ++c) {
            gram_row[c] = dot(constraints[c], g);
        }
        gram_row.back() = dot(g, g);
        constraints.push_back(std::move(g));
        losses.push_back(mv.loss);
        qp.add(mv.loss, std::move(gram_row));
        qp.solve(1e-4 * eps, 20000);
        std::fill(w.begin(), w.end(), 0.0);
        const auto& alpha = qp.alpha();
        for (std::size_t c = 0; c < constraints.size(); ++c) {
            if (alpha[c] != 0.0) {
                for (std::size_t k = 0; k < d; ++k) {
                    w[k] += alpha[c] * constraints[c][k];
                }
            }
        }
    }
    diag.working_set_size = constraints.size();
    diag.final_violation = mv.violation;
    diag.final_slack = slack;
    for (std::size_t c = 0; c < constraints.size(); ++c) {
        diag.working_set_violations.push_back(losses[c] - dot(w, constraints[c]));
    }

    out.model.config = resolved;
    if (resolved.use_intercept) {
        out.model.intercept = w.back();
        w.pop_back();
    }
    out.model.weights = std::move(w);
    return out;
}

} // namespace screenkit
