#pragma once

#include "screenkit/contingency.hpp"
#include "screenkit/corpus.hpp"

#include <array>
#include <optional>
#include <span>
#include <string_view>

namespace screenkit {

enum class Metric { Precision, Recall, FMeasure, Accuracy, Auc, Auprc, AmError, QdError, Yield, Burden, Utility };

inline constexpr std::array<Metric, 11> kAllMetrics{Metric::Precision, Metric::Recall,  Metric::FMeasure,
                                                     Metric::Accuracy,  Metric::Auc,     Metric::Auprc,
                                                     Metric::AmError,   Metric::QdError, Metric::Yield,
                                                     Metric::Burden,    Metric::Utility};

std::string_view to_string(Metric m);
Metric parse_metric(std::string_view s);

/// True for metrics where smaller is better (AM/QD error, burden).
bool lower_is_better(Metric m);

/// Relevant iff score >= threshold.
ContingencyTable confusion(std::span<const double> scores, std::span<const Label> labels, double threshold);

/// Threshold metrics. A value is nullopt when its denominator is zero.
struct ClassificationMetrics {
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f_measure;
    std::optional<double> accuracy;
    std::optional<double> am_error;
    std::optional<double> qd_error;
};

ClassificationMetrics classification_metrics(const ContingencyTable& t, double beta = 1.0);

/// Probability that a random relevant item outscores a random irrelevant
/// one, ties counting one half. nullopt unless both classes are present.
std::optional<double> ranking_auc(std::span<const double> scores, std::span<const Label> labels);

/// Average precision over a descending-score sweep; tied scores enter as
/// one block. nullopt without relevant items.
std::optional<double> ranking_auprc(std::span<const double> scores, std::span<const Label> labels);

struct EvalInput {
    std::span<const double> scores;
    std::span<const Label> labels;
    double threshold = 0.0;
    /// Relevant / irrelevant counts of the screened (training) set.
    std::size_t train_positives = 0;
    std::size_t train_negatives = 0;
};

struct ScreeningMetrics {
    std::optional<double> yield;
    std::optional<double> burden;
    std::optional<double> utility;
};

ScreeningMetrics screening_metrics(const EvalInput& input, double beta = 19.0);

/// Utility from yield and burden.
double utility(double yield, double burden, double beta = 19.0);

class MetricReport {
public:
    std::optional<double>& operator[](Metric m) { return values_[static_cast<std::size_t>(m)]; }
    const std::optional<double>& operator[](Metric m) const { return values_[static_cast<std::size_t>(m)]; }

private:
    std::array<std::optional<double>, kAllMetrics.size()> values_{};
};

/// All eleven metrics for one test split.
MetricReport evaluate(const EvalInput& input);

} // namespace screenkit
