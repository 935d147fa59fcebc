#pragma once

#include "screenkit/corpus.hpp"
#include "screenkit/featurize.hpp"
#include "screenkit/metrics.hpp"
#include "screenkit/svm.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

namespace screenkit {

/// Produces test scores from a training split. Used instead of the SVM
/// trainers when set (baselines, tests).
using CustomScorer = std::function<std::vector<double>(const FeatureMatrix& train, std::span<const Label> labels,
                                                       const FeatureMatrix& test)>;

struct MethodSpec {
    int id = 0;
    std::string name;
    FeatureKind feature = FeatureKind::UniBi;
    TrainConfig config;
    CustomScorer scorer;
};

/// The eighteen compared configurations, ordered by id.
const std::vector<MethodSpec>& method_registry();
const MethodSpec& find_method(int id);
/// Parses "all" or a comma-separated id list.
std::vector<MethodSpec> parse_method_list(std::string_view spec);

struct GridCell {
    double mean = 0.0;
    std::size_t n_defined = 0;

    bool operator==(const GridCell&) const = default;
};

/// Per (dataset, method, metric) means over all repetitions x folds.
class ExperimentGrid {
public:
    std::size_t repetitions = 0;
    std::size_t k = 0;
    std::uint64_t seed = 0;

    void set(const std::string& dataset, int method, Metric metric, GridCell cell);
    /// nullopt when absent or when no evaluation was defined.
    std::optional<double> mean(const std::string& dataset, int method, Metric metric) const;
    std::optional<GridCell> cell(const std::string& dataset, int method, Metric metric) const;
    void set_group(const std::string& dataset, PrevalenceGroup group) { groups_[dataset] = group; }
    std::optional<PrevalenceGroup> group(const std::string& dataset) const;

    /// Sorted dataset names, optionally only those in `group`.
    std::vector<std::string> datasets(std::optional<PrevalenceGroup> group = std::nullopt) const;
    std::vector<int> methods() const;

    /// Columns dataset, method_id, metric, mean, n_defined. Dataset groups go
    /// to the sidecar `datasets_path` (dataset, group) when groups are known.
    void save_csv(const std::filesystem::path& path) const;
    static ExperimentGrid load_csv(const std::filesystem::path& path);
    /// `grid.csv` -> `grid.datasets.csv`.
    static std::filesystem::path datasets_path(const std::filesystem::path& grid_path);

    bool operator==(const ExperimentGrid&) const = default;

private:
    std::map<std::tuple<std::string, int, Metric>, GridCell> cells_;
    std::map<std::string, PrevalenceGroup> groups_;
};

struct GridOptions {
    std::size_t repetitions = 50;
    std::size_t k = 2;
    std::uint64_t seed = 1;
    std::size_t workers = 1;
};

struct EvaluationRecord {
    std::string dataset;
    int method_id = 0;
    std::size_t repetition = 0;
    std::size_t fold = 0;
    MetricReport report;
    bool failed = false;
    std::string error;
};

struct GridRun {
    ExperimentGrid grid;
    /// Dataset-major, then method, repetition, fold.
    std::vector<EvaluationRecord> records;
    std::vector<std::string> warnings;
};

/// Repeated stratified k-fold evaluation of every method on every dataset.
/// Each context's corpus must be fully labeled. A fold whose training throws
/// is recorded as failed and left out of the means. Results do not depend on
/// the worker count.
GridRun run_experiment_grid(std::span<const FeatureContext* const> datasets, std::span<const MethodSpec> methods,
                            const GridOptions& options);

/// Train on `train_rows`, score `test_rows` (which double as the unlabeled
/// set for transductive training).
std::vector<double> train_and_score(const FeatureContext& context, const MethodSpec& method,
                                    std::span<const std::size_t> train_rows, std::span<const Label> train_labels,
                                    std::span<const std::size_t> test_rows);

/// Columns dataset, method_id, repetition, fold, metric, value ("NA" when
/// undefined or failed).
void write_metric_rows_csv(const std::filesystem::path& path, std::span<const EvaluationRecord> records);

struct AnovaObservation {
    std::string dataset;
    int method = 0;
    double value = 0.0;
};

struct AnovaResult {
    double method_f = 0.0;
    double method_p = 1.0;
    double data_f = 0.0;
    double data_p = 1.0;
    std::size_t method_df = 0;
    std::size_t data_df = 0;
    std::size_t residual_df = 0;
    double residual_ss = 0.0;
    /// Residuals of the additive fit, in observation order.
    std::vector<double> residuals;
};

/// Additive METRIC ~ DATA + METHOD model fit by least squares with dummy
/// coding; each factor is F-tested against the model without it. Throws
/// DataError when a factor has one level or no residual degrees of freedom
/// remain.
AnovaResult anova_two_factor(std::span<const AnovaObservation> observations);
AnovaResult anova_two_factor(const ExperimentGrid& grid, Metric metric, std::optional<PrevalenceGroup> group);

struct TTestResult {
    double t = 0.0;
    double p = 1.0;
    std::size_t n = 0;
    /// Zero variance of the differences: p is 1 for a zero mean, 0 otherwise.
    bool degenerate = false;
};

/// Two-sided paired t-test on a - b.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

/// Indices (into p_values) of the methods that join the best method's group
/// under the linear step-up rule as stated: with p sorted descending,
/// p(1) >= ... >= p(m) and pos(k) = m - k + 1, find the first k with
/// p(k) <= pos(k) * alpha / m; methods p(1)..p(k-1) join. When no k
/// qualifies all join. Result is ascending.
std::vector<std::size_t> lsu_select(std::span<const double> p_values, double alpha);

struct RankGroup {
    int best = 0;
    double best_mean = 0.0;
    /// Ascending method ids, best included.
    std::vector<int> methods;
    /// p-value of each non-best candidate tested against the best.
    std::map<int, double> p_values;
};

struct RankGroups {
    Metric metric = Metric::Auc;
    std::optional<PrevalenceGroup> group;
    double alpha = 0.05;
    bool lower_is_better = false;
    std::vector<RankGroup> groups;
};

/// Iterative grouping: the best remaining method (by mean over datasets,
/// ties to the lower id) is paired-t-tested against every other remaining
/// method on the datasets where both are defined, lsu_select forms its
/// group, and the group is removed. `values[m][d]` is method_ids[m]'s mean
/// on dataset d. Pairs sharing fewer than two datasets get p = 1.
RankGroups equivalence_groups(std::span<const int> method_ids,
                              const std::vector<std::vector<std::optional<double>>>& values, double alpha,
                              bool lower_is_better);
RankGroups equivalence_groups(const ExperimentGrid& grid, Metric metric, std::optional<PrevalenceGroup> group,
                              double alpha = 0.05);

/// Columns metric, group, rank_group, method_ids, representative_value; one
/// row per rank group; method ids space-separated.
void write_rank_groups_csv(const std::filesystem::path& path, std::span<const RankGroups> tables);

} // namespace screenkit
