#include "screenkit/metrics.hpp"

#include "screenkit/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace screenkit {

std::string_view to_string(Metric m) {
    switch (m) {
    case Metric::Precision:
        return "precision";
    case Metric::Recall:
        return "recall";
    case Metric::FMeasure:
        return "f_measure";
    case Metric::Accuracy:
        return "accuracy";
    case Metric::Auc:
        return "auc";
    case Metric::Auprc:
        return "auprc";
    case Metric::AmError:
        return "am_error";
    case Metric::QdError:
        return "qd_error";
    case Metric::Yield:
        return "yield";
    case Metric::Burden:
        return "burden";
    case Metric::Utility:
        return "utility";
    }
    return "?";
}

Metric parse_metric(std::string_view s) {
    for (auto m : kAllMetrics) {
        if (to_string(m) == s) {
            return m;
        }
    }
    throw UsageError("unknown metric '" + std::string(s) + "'");
}

bool lower_is_better(Metric m) {
    return m == Metric::AmError || m == Metric::QdError || m == Metric::Burden;
}

namespace {

void check_lengths(std::span<const double> scores, std::span<const Label> labels) {
    if (scores.size() != labels.size()) {
        throw UsageError("scores (" + std::to_string(scores.size()) + ") and labels (" +
                         std::to_string(labels.size()) + ") differ in length");
    }
}

std::optional<double> ratio(double num, double den) {
    if (den == 0.0) {
        return std::nullopt;
    }
    return num / den;
}

} // namespace

ContingencyTable confusion(std::span<const double> scores, std::span<const Label> labels, double threshold) {
    check_lengths(scores, labels);
    if (scores.empty()) {
        throw UsageError("confusion of an empty prediction set");
    }
    ContingencyTable t;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool predicted = scores[i] >= threshold;
        if (is_relevant(labels[i])) {
            (predicted ? t.tp : t.fn) += 1;
        } else {
            (predicted ? t.fp : t.tn) += 1;
        }
    }
    return t;
}

ClassificationMetrics classification_metrics(const ContingencyTable& t, double beta) {
    const auto tp = static_cast<double>(t.tp), fp = static_cast<double>(t.fp);
    const auto tn = static_cast<double>(t.tn), fn = static_cast<double>(t.fn);
    ClassificationMetrics m;
    m.precision = ratio(tp, tp + fp);
    m.recall = ratio(tp, tp + fn);
    if (m.precision && m.recall && (*m.precision + *m.recall) > 0.0) {
        const double b2 = beta * beta;
        m.f_measure = (1.0 + b2) * *m.precision * *m.recall / (b2 * *m.precision + *m.recall);
    }
    m.accuracy = ratio(tp + tn, tp + tn + fp + fn);
    if (t.positives() > 0 && t.negatives() > 0) {
        const double lrp = fn / (tp + fn);
        const double lrn = fp / (fp + tn);
        m.am_error = (lrp + lrn) / 2.0;
        m.qd_error = std::sqrt((lrp * lrp + lrn * lrn) / 2.0);
    }
    return m;
}

std::optional<double> ranking_auc(std::span<const double> scores, std::span<const Label> labels) {
    check_lengths(scores, labels);
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });
    // Mann-Whitney U from mid-ranks.
    double rank_sum = 0.0;
    std::size_t pos = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) {
            ++j;
        }
        const double mid = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k) {
            if (is_relevant(labels[order[k]])) {
                rank_sum += mid;
                ++pos;
            }
        }
        i = j;
    }
    const std::size_t neg = n - pos;
    if (pos == 0 || neg == 0) {
        return std::nullopt;
    }
    const double p = static_cast<double>(pos), q = static_cast<double>(neg);
    return (rank_sum - p * (p + 1.0) / 2.0) / (p * q);
}

std::optional<double> ranking_auprc(std::span<const double> scores, std::span<const Label> labels) {
    check_lengths(scores, labels);
    const std::size_t n = scores.size();
    const auto total_pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), Label::Relevant));
    if (total_pos == 0) {
        return std::nullopt;
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });
    double area = 0.0;
    std::size_t tp = 0, seen = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        std::size_t block_tp = 0;
        while (j < n && scores[order[j]] == scores[order[i]]) {
            block_tp += is_relevant(labels[order[j]]) ? 1 : 0;
            ++j;
        }
        tp += block_tp;
        seen = j;
        if (block_tp > 0) {
            const double precision = static_cast<double>(tp) / static_cast<double>(seen);
            area += precision * static_cast<double>(block_tp) / static_cast<double>(total_pos);
        }
        i = j;
    }
    return area;
}

double utility(double yield, double burden, double beta) {
    return (beta * yield + (1.0 - burden)) / (beta + 1.0);
}

ScreeningMetrics screening_metrics(const EvalInput& in, double beta) {
    const auto t = confusion(in.scores, in.labels, in.threshold);
    const double tp_l = static_cast<double>(in.train_positives);
    const double tn_l = static_cast<double>(in.train_negatives);
    const double total = tp_l + tn_l + static_cast<double>(t.total());
    ScreeningMetrics m;
    m.burden = ratio(tp_l + tn_l + static_cast<double>(t.tp + t.fp), total);
    m.yield = ratio(tp_l + static_cast<double>(t.tp), tp_l + static_cast<double>(t.tp + t.fn));
    if (m.yield && m.burden) {
        m.utility = utility(*m.yield, *m.burden, beta);
    }
    return m;
}

MetricReport evaluate(const EvalInput& in) {
    const auto t = confusion(in.scores, in.labels, in.threshold);
    const auto c = classification_metrics(t);
    const auto s = screening_metrics(in);
    MetricReport r;
    r[Metric::Precision] = c.precision;
    r[Metric::Recall] = c.recall;
    r[Metric::FMeasure] = c.f_measure;
    r[Metric::Accuracy] = c.accuracy;
    r[Metric::Auc] = ranking_auc(in.scores, in.labels);
    r[Metric::Auprc] = ranking_auprc(in.scores, in.labels);
    r[Metric::AmError] = c.am_error;
    r[Metric::QdError] = c.qd_error;
    r[Metric::Yield] = s.yield;
    r[Metric::Burden] = s.burden;
    r[Metric::Utility] = s.utility;
    return r;
}

} // namespace screenkit
