#include "dual_cd.hpp"
#include "screenkit/error.hpp"
#include "screenkit/svm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace screenkit {

namespace {

FeatureMatrix stack(const FeatureMatrix& a, const FeatureMatrix& b) {
    FeatureMatrix m(a.cols());
    for (std::size_t r = 0; r < a.rows(); ++r) {
        m.append_row(a.row_indices(r), a.row_values(r));
    }
    for (std::size_t r = 0; r < b.rows(); ++r) {
        m.append_row(b.row_indices(r), b.row_values(r));
    }
    return m;
}

constexpr std::size_t kMaxSwitchRounds = 20;

} // namespace

TrainOutcome train_transductive(const FeatureMatrix& labeled, std::span<const Label> labels,
                                const FeatureMatrix& unlabeled, const TrainConfig& config) {
    TrainConfig inductive = config;
    inductive.loss = Loss::Hinge;
    auto init = train_weighted_hinge(labeled, labels, inductive);
    if (unlabeled.rows() == 0) {
        init.model.config.loss = Loss::Transductive;
        init.diagnostics.warnings.push_back("no unlabeled citations; transductive training fell back to inductive");
        return init;
    }
    if (unlabeled.cols() != labeled.cols()) {
        throw DataError("labeled and unlabeled feature dimensions differ");
    }
    TrainConfig resolved = init.model.config;
    resolved.loss = Loss::Transductive;
    const double C = *resolved.cost_c;

    const std::size_t nl = labeled.rows();
    const std::size_t nu = unlabeled.rows();
    const FeatureMatrix all = stack(labeled, unlabeled);

    // Pseudo-label the top-scored unlabeled fraction equal to the labeled prevalence.
    const auto relevant = static_cast<double>(std::count(labels.begin(), labels.end(), Label::Relevant));
    const auto num_pos = static_cast<std::size_t>(
        std::clamp<long long>(std::llround(relevant / static_cast<double>(nl) * static_cast<double>(nu)), 0,
                              static_cast<long long>(nu)));
    const auto u_scores = score_citations(init.model, unlabeled);
    std::vector<std::size_t> order(nu);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return u_scores[a] > u_scores[b]; });

    std::vector<int> y(nl + nu);
    for (std::size_t i = 0; i < nl; ++i) {
        y[i] = sign(labels[i]);
    }
    for (std::size_t k = 0; k < nu; ++k) {
        y[nl + order[k]] = k < num_pos ? 1 : -1;
    }

    const double final_cost = C;
    double cost_neg = 1e-3 * C;
    double cost_pos = num_pos > 0 && num_pos < nu
                          ? cost_neg * static_cast<double>(num_pos) / static_cast<double>(nu - num_pos)
                          : cost_neg;

    std::vector<double> upper(nl + nu);
    for (std::size_t i = 0; i < nl; ++i) {
        upper[i] = C;
    }
    detail::DualSolution sol;
    std::vector<double> alpha;
    TrainOutcome out;
    out.diagnostics.initial_pseudo_positives = num_pos;
    for (;;) {
        for (std::size_t i = nl; i < nl + nu; ++i) {
            upper[i] = y[i] > 0 ? cost_pos : cost_neg;
        }
        for (std::size_t round = 0; round < kMaxSwitchRounds; ++round) {
            detail::DualProblem problem{&all, y, upper, resolved.use_intercept, *resolved.epsilon,
                                        resolved.max_iters};
            sol = detail::solve_dual_cd(problem, alpha);
            alpha = sol.alpha;
            out.diagnostics.iterations += sol.epochs;

            // Switch pairs of opposite pseudo-labels whose slacks sum above 2.
            std::vector<std::pair<double, std::size_t>> pos_slack, neg_slack;
            for (std::size_t i = nl; i < nl + nu; ++i) {
                const double margin = y[i] * (all.dot(i, sol.w) + sol.b);
                const double xi = std::max(0.0, 1.0 - margin);
                if (xi > 0.0) {
                    (y[i] > 0 ? pos_slack : neg_slack).emplace_back(xi, i);
                }
            }
            auto by_slack = [](const auto& a, const auto& b) {
                return a.first != b.first ? a.first > b.first : a.second < b.second;
            };
            std::sort(pos_slack.begin(), pos_slack.end(), by_slack);
            std::sort(neg_slack.begin(), neg_slack.end(), by_slack);
            std::size_t switched = 0;
            for (std::size_t k = 0; k < std::min(pos_slack.size(), neg_slack.size()); ++k) {
                if (pos_slack[k].first + neg_slack[k].first <= 2.0) {
                    break;
                }
                const auto i = pos_slack[k].second, j = neg_slack[k].second;
                y[i] = -1;
                y[j] = 1;
                std::swap(upper[i], upper[j]);
                alpha[i] = 0.0;
                alpha[j] = 0.0;
                ++switched;
            }
            if (switched == 0) {
                break;
            }
        }
        if (cost_neg >= final_cost && cost_pos >= final_cost) {
            break;
        }
        cost_neg = std::min(2.0 * cost_neg, final_cost);
        cost_pos = std::min(2.0 * cost_pos, final_cost);
    }

    out.model.weights = std::move(sol.w);
    out.model.intercept = resolved.use_intercept ? sol.b : 0.0;
    out.model.config = resolved;
    out.diagnostics.converged = sol.converged;
    out.diagnostics.objective_trace = std::move(sol.objective_trace);
    if (!sol.converged) {
        out.diagnostics.warnings.push_back("transductive solver reached max_iters on the final subproblem");
    }
    return out;
}

} // namespace screenkit
