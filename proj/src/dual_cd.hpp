#pragma once

#include "screenkit/feature_matrix.hpp"

#include <span>
#include <vector>

namespace screenkit::detail {

struct DualProblem {
    const FeatureMatrix* x = nullptr;
    std::span<const int> y;
    /// Per-instance upper bound C * k_i.
    std::span<const double> upper;
    bool bias = false;
    double epsilon = 0.01;
    std::size_t max_epochs = 1000;
};

struct DualSolution {
    std::vector<double> alpha;
    std::vector<double> w;
    double b = 0.0;
    std::size_t epochs = 0;
    bool converged = false;
    std::vector<double> objective_trace;
};

/// Dual coordinate descent for the L1-loss linear SVM. `alpha0` warm-starts
/// the solver and is clipped into [0, upper].
DualSolution solve_dual_cd(const DualProblem& problem, std::vector<double> alpha0 = {});

} // namespace screenkit::detail
