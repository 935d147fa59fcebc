#pragma once

#include "screenkit/contingency.hpp"
#include "screenkit/corpus.hpp"
#include "screenkit/feature_matrix.hpp"

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace screenkit {

enum class Loss { Hinge, CostHinge, Transductive, Auc, Kld, QuadMean };

std::string_view to_string(Loss loss);
Loss parse_loss(std::string_view s);
bool is_multivariate(Loss loss);

struct TrainConfig {
    Loss loss = Loss::Hinge;
    /// Train an intercept (the b=1 setting); without it the hyperplane passes
    /// through the origin.
    bool use_intercept = true;
    /// Regularization; nullopt resolves from the training features.
    std::optional<double> cost_c;
    /// Positive-class cost multiplier for CostHinge; nullopt resolves to
    /// #irrelevant / #relevant.
    std::optional<double> j_ratio;
    /// Convergence tolerance; nullopt picks the per-loss default.
    std::optional<double> epsilon;
    std::size_t max_iters = 1000;

    bool operator==(const TrainConfig&) const = default;
};

/// Defaults: 0.01 (max projected-gradient spread) for the hinge solvers,
/// 0.001 (slack units) for cutting-plane training.
double default_epsilon(Loss loss);

struct LinearModel {
    std::vector<double> weights;
    double intercept = 0.0;
    double decision_threshold = 0.0;
    /// Configuration with cost_c, j_ratio and epsilon resolved.
    TrainConfig config;

    std::size_t dim() const { return weights.size(); }
    bool operator==(const LinearModel&) const = default;
};

struct TrainDiagnostics {
    std::size_t iterations = 0;
    bool converged = false;
    std::vector<std::string> warnings;
    /// Hinge solvers: dual objective 0.5*|w|^2 - sum(alpha) after each epoch.
    std::vector<double> objective_trace;
    /// Cutting plane: best primal objective seen minus the working-set dual
    /// value, after each outer iteration.
    std::vector<double> gap_trace;
    /// Cutting plane: most-violated value minus working-set slack, per outer
    /// iteration (the stopping quantity).
    std::vector<double> excess_violation_trace;
    std::size_t working_set_size = 0;
    /// Cutting plane: per working-set constraint, loss - w.g at termination.
    std::vector<double> working_set_violations;
    /// Cutting plane: most-violated value at the final weights.
    double final_violation = 0.0;
    double final_slack = 0.0;
    /// Transductive: unlabeled citations pseudo-labeled relevant at the start.
    std::size_t initial_pseudo_positives = 0;
};

struct TrainOutcome {
    LinearModel model;
    TrainDiagnostics diagnostics;
};

/// 1 / b^2 where b is the mean Euclidean norm of the feature rows.
double default_c(const FeatureMatrix& features);

/// #irrelevant / #relevant.
double resolve_j(std::span<const Label> labels);

/// Minimizes 0.5|w|^2 + C * sum_i k_i * max(0, 1 - y_i (w.x_i + b)) by dual
/// coordinate descent over instances in fixed order; k_i = J for relevant
/// instances under CostHinge and 1 otherwise.
TrainOutcome train_weighted_hinge(const FeatureMatrix& features, std::span<const Label> labels,
                                  const TrainConfig& config);

enum class StructuredLoss { Error, Auc, Kld, QuadMean, Am };

std::optional<StructuredLoss> structured_loss(Loss loss);

/// Loss of a predicted labeling summarized by its contingency table.
/// Recall-based losses (QuadMean, Am) need both classes present; KLD uses
/// add-1/(2n) smoothing on both distributions.
double contingency_loss(const ContingencyTable& table, StructuredLoss loss);

/// Most violated output for one cutting-plane step.
///
/// For a contingency loss the output is a labeling y' and the violation is
/// loss(y', y) - (1/n) sum_{i: y'_i != y_i} y_i s_i. For AUC the output is a
/// set of swapped (relevant, irrelevant) pairs and the violation is
/// (1/(P N)) sum_{swapped (i,j)} (1 - s_i + s_j).
struct MostViolated {
    /// Contingency losses only.
    std::vector<Label> labeling;
    /// AUC only: number of swapped pairs.
    std::size_t swapped_pairs = 0;
    /// Constraint direction: g = sum_k coefficients[k] * x_k.
    std::vector<double> coefficients;
    double loss = 0.0;
    double violation = 0.0;
};

MostViolated find_most_violated(std::span<const double> scores, std::span<const Label> labels,
                                StructuredLoss loss);

/// 1-slack cutting-plane training against a multivariate loss. C defaults
/// to n * default_c(features).
TrainOutcome train_multivariate(const FeatureMatrix& features, std::span<const Label> labels,
                                const TrainConfig& config);

/// Label-switching transductive training. Falls back to inductive hinge
/// training (with a warning) when `unlabeled` has no rows.
TrainOutcome train_transductive(const FeatureMatrix& labeled, std::span<const Label> labels,
                                const FeatureMatrix& unlabeled, const TrainConfig& config);

/// Dispatches on config.loss. `unlabeled` is used by Transductive only.
TrainOutcome train(const FeatureMatrix& features, std::span<const Label> labels, const TrainConfig& config,
                   const FeatureMatrix* unlabeled = nullptr);

/// w.x_i + intercept for every row.
std::vector<double> score_citations(const LinearModel& model, const FeatureMatrix& features);

/// Relevant iff score >= model.decision_threshold.
std::vector<Label> predict(const LinearModel& model, std::span<const double> scores);

void save_model(const LinearModel& model, const std::filesystem::path& path);
LinearModel load_model(const std::filesystem::path& path);

} // namespace screenkit
