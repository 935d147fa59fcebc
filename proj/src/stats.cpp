#include "screenkit/stats.hpp"

#include "screenkit/csv.hpp"
#include "screenkit/error.hpp"

#include <Eigen/Dense>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

namespace screenkit {

namespace {

MethodSpec make(int id, std::string name, FeatureKind feature, Loss loss, bool intercept) {
    MethodSpec m;
    m.id = id;
    m.name = std::move(name);
    m.feature = feature;
    m.config.loss = loss;
    m.config.use_intercept = intercept;
    return m;
}

std::vector<MethodSpec> build_registry() {
    using F = FeatureKind;
    std::vector<MethodSpec> r{
        make(1, "svm_perf(b=0,auc)", F::UniBi, Loss::Auc, false),
        make(2, "svm_perf(b=1,auc)", F::UniBi, Loss::Auc, true),
        make(3, "svm_perf(b=1,kld)", F::UniBi, Loss::Kld, true),
        make(4, "svm_perf(b=1,quadmean)", F::UniBi, Loss::QuadMean, true),
        make(5, "svm_default", F::UniBi, Loss::Hinge, true),
        make(6, "svm_cost(j,b=0)", F::UniBi, Loss::CostHinge, false),
        make(7, "svm_cost(j,b=1)", F::UniBi, Loss::CostHinge, true),
        make(11, "svm_trans", F::UniBi, Loss::Transductive, true),
    };
    for (auto [base, feature, tag] : {std::tuple{20, F::W2vRow, "w2v_row"}, std::tuple{30, F::W2vCol, "w2v_col"}}) {
        const std::string t = tag;
        r.push_back(make(base + 1, t + " svm_perf(b=1,auc)", feature, Loss::Auc, true));
        r.push_back(make(base + 2, t + " svm_perf(b=1,kld)", feature, Loss::Kld, true));
        r.push_back(make(base + 3, t + " svm_perf(b=1,quadmean)", feature, Loss::QuadMean, true));
        r.push_back(make(base + 4, t + " svm_cost(j,b=0)", feature, Loss::CostHinge, false));
        r.push_back(make(base + 5, t + " svm_cost(j,b=1)", feature, Loss::CostHinge, true));
    }
    return r;
}

} // namespace

const std::vector<MethodSpec>& method_registry() {
    static const std::vector<MethodSpec> registry = build_registry();
    return registry;
}

const MethodSpec& find_method(int id) {
    for (const auto& m : method_registry()) {
        if (m.id == id) {
            return m;
        }
    }
    throw UsageError("unknown method id " + std::to_string(id));
}

std::vector<MethodSpec> parse_method_list(std::string_view spec) {
    if (spec == "all") {
        return method_registry();
    }
    std::vector<MethodSpec> out;
    std::stringstream ss{std::string(spec)};
    std::string item;
    while (std::getline(ss, item, ',')) {
        int id = 0;
        try {
            std::size_t used = 0;
            id = std::stoi(item, &used);
            if (used != item.size()) {
                throw std::invalid_argument(item);
            }
        } catch (const std::logic_error&) {
            throw UsageError("bad method id '" + item + "'");
        }
        out.push_back(find_method(id));
    }
    if (out.empty()) {
        throw UsageError("empty method list");
    }
    return out;
}

// ---------------------------------------------------------------- grid

void ExperimentGrid::set(const std::string& dataset, int method, Metric metric, GridCell cell) {
    cells_[{dataset, method, metric}] = cell;
}

std::optional<GridCell> ExperimentGrid::cell(const std::string& dataset, int method, Metric metric) const {
    auto it = cells_.find({dataset, method, metric});
    if (it == cells_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::optional<double> ExperimentGrid::mean(const std::string& dataset, int method, Metric metric) const {
    auto c = cell(dataset, method, metric);
    if (!c || c->n_defined == 0) {
        return std::nullopt;
    }
    return c->mean;
}

std::optional<PrevalenceGroup> ExperimentGrid::group(const std::string& dataset) const {
    auto it = groups_.find(dataset);
    if (it == groups_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::vector<std::string> ExperimentGrid::datasets(std::optional<PrevalenceGroup> group) const {
    std::set<std::string> names;
    for (const auto& [key, cell] : cells_) {
        const auto& name = std::get<0>(key);
        if (group) {
            auto g = this->group(name);
            if (!g) {
                throw DataError("no prevalence group recorded for dataset '" + name + "'");
            }
            if (*g != *group) {
                continue;
            }
        }
        names.insert(name);
    }
    return {names.begin(), names.end()};
}

std::vector<int> ExperimentGrid::methods() const {
    std::set<int> ids;
    for (const auto& [key, cell] : cells_) {
        ids.insert(std::get<1>(key));
    }
    return {ids.begin(), ids.end()};
}

std::filesystem::path ExperimentGrid::datasets_path(const std::filesystem::path& grid_path) {
    auto p = grid_path;
    p.replace_extension(".datasets.csv");
    return p;
}

void ExperimentGrid::save_csv(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    csv::write_record(out, {"dataset", "method_id", "metric", "mean", "n_defined"});
    for (const auto& [key, cell] : cells_) {
        const auto& [dataset, method, metric] = key;
        csv::write_record(out, {dataset, std::to_string(method), std::string(to_string(metric)),
                                cell.n_defined ? csv::format_double(cell.mean) : "NA",
                                std::to_string(cell.n_defined)});
    }
    if (!groups_.empty()) {
        std::ofstream side(datasets_path(path), std::ios::binary);
        if (!side) {
            throw DataError("cannot write " + datasets_path(path).string());
        }
        csv::write_record(side, {"dataset", "group"});
        for (const auto& [name, g] : groups_) {
            csv::write_record(side, {name, std::string(to_string(g))});
        }
    }
}

namespace {

std::vector<std::vector<std::string>> read_csv_file(const std::filesystem::path& path,
                                                    const std::vector<std::string>& header) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open " + path.string());
    }
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> fields;
    std::size_t line = 0;
    if (!csv::read_record(in, fields, line) || fields != header) {
        throw DataError(path.string() + ": unexpected header");
    }
    while (csv::read_record(in, fields, line)) {
        if (fields.size() == 1 && fields[0].empty()) {
            continue;
        }
        if (fields.size() != header.size()) {
            throw DataError(path.string() + ": malformed row at line " + std::to_string(line));
        }
        rows.push_back(fields);
    }
    return rows;
}

} // namespace

ExperimentGrid ExperimentGrid::load_csv(const std::filesystem::path& path) {
    ExperimentGrid g;
    for (const auto& f : read_csv_file(path, {"dataset", "method_id", "metric", "mean", "n_defined"})) {
        GridCell c;
        try {
            c.n_defined = std::stoull(f[4]);
            c.mean = c.n_defined ? csv::parse_double(f[3]) : 0.0;
            g.set(f[0], std::stoi(f[1]), parse_metric(f[2]), c);
        } catch (const UsageError& e) {
            throw DataError(path.string() + ": " + e.what());
        } catch (const std::logic_error&) {
            throw DataError(path.string() + ": bad number in row for dataset '" + f[0] + "'");
        }
    }
    const auto side = datasets_path(path);
    if (std::filesystem::exists(side)) {
        for (const auto& f : read_csv_file(side, {"dataset", "group"})) {
            try {
                g.set_group(f[0], parse_prevalence_group(f[1]));
            } catch (const UsageError& e) {
                throw DataError(side.string() + ": " + e.what());
            }
        }
    }
    return g;
}

std::vector<double> train_and_score(const FeatureContext& context, const MethodSpec& method,
                                    std::span<const std::size_t> train_rows, std::span<const Label> train_labels,
                                    std::span<const std::size_t> test_rows) {
    const FeatureMatrix& all = context.matrix(method.feature);
    const auto train_x = all.select_rows(train_rows);
    const auto test_x = all.select_rows(test_rows);
    if (method.scorer) {
        return method.scorer(train_x, train_labels, test_x);
    }
    const auto outcome = train(train_x, train_labels, method.config, &test_x);
    return score_citations(outcome.model, test_x);
}

GridRun run_experiment_grid(std::span<const FeatureContext* const> datasets, std::span<const MethodSpec> methods,
                            const GridOptions& options) {
    if (datasets.empty() || methods.empty()) {
        throw UsageError("experiment grid needs at least one dataset and one method");
    }
    GridRun run;
    run.grid.repetitions = options.repetitions;
    run.grid.k = options.k;
    run.grid.seed = options.seed;

    std::vector<FoldPlan> plans;
    std::vector<std::vector<Label>> labels;
    for (const auto* ctx : datasets) {
        const Corpus& corpus = ctx->corpus();
        if (!corpus.fully_labeled()) {
            throw DataError("corpus '" + corpus.name() + "' is not fully labeled");
        }
        labels.push_back(corpus.labels());
        plans.push_back(stratified_folds(labels.back(), options.repetitions, options.k, options.seed, &run.warnings));
        run.grid.set_group(corpus.name(), prevalence(corpus).group);
        // Build matrices up front so workers only read them.
        for (const auto& m : methods) {
            ctx->matrix(m.feature);
        }
    }

    const std::size_t per_method = options.repetitions * options.k;
    const std::size_t total = datasets.size() * methods.size() * per_method;
    run.records.resize(total);

    auto task = [&](std::size_t t) {
        const std::size_t d = t / (methods.size() * per_method);
        const std::size_t m = (t / per_method) % methods.size();
        const std::size_t rep = (t % per_method) / options.k;
        const std::size_t fold = t % options.k;
        EvaluationRecord& rec = run.records[t];
        rec.dataset = datasets[d]->corpus().name();
        rec.method_id = methods[m].id;
        rec.repetition = rep;
        rec.fold = fold;
        const auto test_rows = plans[d].test(rep, fold);
        const auto train_rows = plans[d].train(rep, fold);
        std::vector<Label> train_labels, test_labels;
        std::size_t train_pos = 0;
        for (auto r : train_rows) {
            train_labels.push_back(labels[d][r]);
            train_pos += is_relevant(labels[d][r]) ? 1 : 0;
        }
        for (auto r : test_rows) {
            test_labels.push_back(labels[d][r]);
        }
        try {
            const auto scores = train_and_score(*datasets[d], methods[m], train_rows, train_labels, test_rows);
            EvalInput in;
            in.scores = scores;
            in.labels = test_labels;
            in.threshold = 0.0;
            in.train_positives = train_pos;
            in.train_negatives = train_rows.size() - train_pos;
            rec.report = evaluate(in);
        } catch (const std::exception& e) {
            rec.failed = true;
            rec.error = e.what();
        }
    };

    const std::size_t workers = std::max<std::size_t>(1, std::min(options.workers, total));
    std::atomic<std::size_t> next{0};
    auto loop = [&] {
        for (std::size_t t = next++; t < total; t = next++) {
            task(t);
        }
    };
    if (workers == 1) {
        loop();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back(loop);
        }
    }

    for (std::size_t d = 0; d < datasets.size(); ++d) {
        for (std::size_t m = 0; m < methods.size(); ++m) {
            const std::size_t base = (d * methods.size() + m) * per_method;
            std::size_t failed = 0;
            for (auto metric : kAllMetrics) {
                double sum = 0.0;
                std::size_t n = 0;
                for (std::size_t i = 0; i < per_method; ++i) {
                    const auto& rec = run.records[base + i];
                    if (!rec.failed && rec.report[metric]) {
                        sum += *rec.report[metric];
                        ++n;
                    }
                }
                run.grid.set(datasets[d]->corpus().name(), methods[m].id, metric,
                             GridCell{n ? sum / static_cast<double>(n) : 0.0, n});
            }
            for (std::size_t i = 0; i < per_method; ++i) {
                failed += run.records[base + i].failed ? 1 : 0;
            }
            if (failed > 0) {
                run.warnings.push_back("method " + std::to_string(methods[m].id) + " failed on " +
                                       std::to_string(failed) + " of " + std::to_string(per_method) + " folds of " +
                                       datasets[d]->corpus().name() + ": " + run.records[base].error);
            }
        }
    }
    return run;
}

void write_metric_rows_csv(const std::filesystem::path& path, std::span<const EvaluationRecord> records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    csv::write_record(out, {"dataset", "method_id", "repetition", "fold", "metric", "value"});
    for (const auto& r : records) {
        for (auto metric : kAllMetrics) {
            const auto& v = r.report[metric];
            csv::write_record(out, {r.dataset, std::to_string(r.method_id), std::to_string(r.repetition),
                                    std::to_string(r.fold), std::string(to_string(metric)),
                                    (!r.failed && v) ? csv::format_double(*v) : "NA"});
        }
    }
}

// ---------------------------------------------------------------- ANOVA

namespace {

struct Fit {
    double rss = 0.0;
    Eigen::Index rank = 0;
    Eigen::VectorXd residuals;
};

Fit least_squares(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    Fit f;
    f.rank = qr.rank();
    const Eigen::VectorXd beta = qr.solve(y);
    f.residuals = y - x * beta;
    f.rss = f.residuals.squaredNorm();
    return f;
}

std::pair<double, double> f_test(double rss_reduced, double rss_full, std::size_t df1, std::size_t df2, double tol) {
    const double num = std::max(0.0, rss_reduced - rss_full);
    if (df1 == 0) {
        return {0.0, 1.0};
    }
    if (rss_full <= tol) {
        if (num <= tol) {
            return {std::numeric_limits<double>::quiet_NaN(), 1.0};
        }
        return {std::numeric_limits<double>::infinity(), 0.0};
    }
    const double f = (num / static_cast<double>(df1)) / (rss_full / static_cast<double>(df2));
    boost::math::fisher_f dist(static_cast<double>(df1), static_cast<double>(df2));
    return {f, boost::math::cdf(boost::math::complement(dist, f))};
}

} // namespace

AnovaResult anova_two_factor(std::span<const AnovaObservation> obs) {
    std::map<std::string, Eigen::Index> data_levels;
    std::map<int, Eigen::Index> method_levels;
    for (const auto& o : obs) {
        data_levels.emplace(o.dataset, 0);
        method_levels.emplace(o.method, 0);
    }
    if (data_levels.size() < 2) {
        throw DataError("ANOVA needs at least two datasets");
    }
    if (method_levels.size() < 2) {
        throw DataError("ANOVA needs at least two methods");
    }
    Eigen::Index next = 0;
    for (auto& [k, v] : data_levels) {
        v = next++;
    }
    next = 0;
    for (auto& [k, v] : method_levels) {
        v = next++;
    }
    const auto n = static_cast<Eigen::Index>(obs.size());
    const auto nd = static_cast<Eigen::Index>(data_levels.size()) - 1;
    const auto nm = static_cast<Eigen::Index>(method_levels.size()) - 1;

    // Columns: intercept | dataset dummies (first level dropped) | method dummies.
    Eigen::MatrixXd full = Eigen::MatrixXd::Zero(n, 1 + nd + nm);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& o = obs[static_cast<std::size_t>(i)];
        full(i, 0) = 1.0;
        if (auto d = data_levels[o.dataset]; d > 0) {
            full(i, d) = 1.0;
        }
        if (auto m = method_levels[o.method]; m > 0) {
            full(i, nd + m) = 1.0;
        }
        y(i) = o.value;
    }
    Eigen::MatrixXd no_method(n, 1 + nd);
    no_method << full.leftCols(1 + nd);
    Eigen::MatrixXd no_data(n, 1 + nm);
    no_data << full.col(0), full.rightCols(nm);

    const Fit f = least_squares(full, y);
    const Fit fm = least_squares(no_method, y);
    const Fit fd = least_squares(no_data, y);
    if (n <= f.rank) {
        throw DataError("ANOVA design leaves no residual degrees of freedom");
    }
    const double tss = (y.array() - y.mean()).square().sum();
    const double tol = 1e-24 + 1e-13 * tss;

    AnovaResult r;
    r.residual_df = static_cast<std::size_t>(n - f.rank);
    r.method_df = static_cast<std::size_t>(f.rank - fm.rank);
    r.data_df = static_cast<std::size_t>(f.rank - fd.rank);
    r.residual_ss = f.rss;
    std::tie(r.method_f, r.method_p) = f_test(fm.rss, f.rss, r.method_df, r.residual_df, tol);
    std::tie(r.data_f, r.data_p) = f_test(fd.rss, f.rss, r.data_df, r.residual_df, tol);
    r.residuals.assign(f.residuals.data(), f.residuals.data() + n);
    return r;
}

AnovaResult anova_two_factor(const ExperimentGrid& grid, Metric metric, std::optional<PrevalenceGroup> group) {
    std::vector<AnovaObservation> obs;
    for (const auto& d : grid.datasets(group)) {
        for (int m : grid.methods()) {
            if (auto v = grid.mean(d, m, metric)) {
                obs.push_back({d, m, *v});
            }
        }
    }
    return anova_two_factor(obs);
}

// ---------------------------------------------------------------- tests

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw UsageError("paired t-test needs equal-length samples");
    }
    if (a.size() < 2) {
        throw UsageError("paired t-test needs at least two pairs");
    }
    const std::size_t n = a.size();
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mean += a[i] - b[i];
    }
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i] - mean;
        ss += d * d;
    }
    TTestResult r;
    r.n = n;
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (sd == 0.0) {
        r.degenerate = true;
        if (mean == 0.0) {
            r.t = 0.0;
            r.p = 1.0;
        } else {
            r.t = std::copysign(std::numeric_limits<double>::infinity(), mean);
            r.p = 0.0;
        }
        return r;
    }
    r.t = mean / (sd / std::sqrt(static_cast<double>(n)));
    boost::math::students_t dist(static_cast<double>(n - 1));
    r.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(r.t)));
    r.p = std::min(r.p, 1.0);
    return r;
}

std::vector<std::size_t> lsu_select(std::span<const double> p_values, double alpha) {
    const std::size_t m = p_values.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return p_values[a] > p_values[b]; });
    std::size_t joined = m;
    for (std::size_t k = 1; k <= m; ++k) {
        const double pos = static_cast<double>(m - k + 1);
        if (p_values[order[k - 1]] <= pos * alpha / static_cast<double>(m)) {
            joined = k - 1;
            break;
        }
    }
    std::vector<std::size_t> out(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(joined));
    std::sort(out.begin(), out.end());
    return out;
}

RankGroups equivalence_groups(std::span<const int> method_ids,
                              const std::vector<std::vector<std::optional<double>>>& values, double alpha,
                              bool lower_is_better) {
    if (values.size() != method_ids.size()) {
        throw UsageError("one value row per method required");
    }
    RankGroups out;
    out.alpha = alpha;
    out.lower_is_better = lower_is_better;

    std::vector<std::size_t> remaining;
    std::vector<double> means(method_ids.size());
    for (std::size_t m = 0; m < method_ids.size(); ++m) {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& v : values[m]) {
            if (v) {
                sum += *v;
                ++n;
            }
        }
        if (n > 0) {
            means[m] = sum / static_cast<double>(n);
            remaining.push_back(m);
        }
    }
    auto better = [&](std::size_t a, std::size_t b) {
        if (means[a] != means[b]) {
            return lower_is_better ? means[a] < means[b] : means[a] > means[b];
        }
        return method_ids[a] < method_ids[b];
    };

    while (!remaining.empty()) {
        const std::size_t best = *std::min_element(remaining.begin(), remaining.end(), better);
        std::vector<std::size_t> others;
        std::vector<double> p;
        for (auto m : remaining) {
            if (m == best) {
                continue;
            }
            std::vector<double> a, b;
            for (std::size_t d = 0; d < values[m].size() && d < values[best].size(); ++d) {
                if (values[m][d] && values[best][d]) {
                    a.push_back(*values[best][d]);
                    b.push_back(*values[m][d]);
                }
            }
            others.push_back(m);
            p.push_back(a.size() >= 2 ? paired_t_test(a, b).p : 1.0);
        }
        RankGroup g;
        g.best = method_ids[best];
        g.best_mean = means[best];
        g.methods.push_back(method_ids[best]);
        std::vector<std::size_t> joined;
        if (!others.empty()) {
            for (auto i : lsu_select(p, alpha)) {
                joined.push_back(others[i]);
            }
            for (std::size_t i = 0; i < others.size(); ++i) {
                g.p_values[method_ids[others[i]]] = p[i];
            }
        }
        for (auto m : joined) {
            g.methods.push_back(method_ids[m]);
        }
        std::sort(g.methods.begin(), g.methods.end());
        std::erase_if(remaining, [&](std::size_t m) {
            return m == best || std::find(joined.begin(), joined.end(), m) != joined.end();
        });
        out.groups.push_back(std::move(g));
    }
    return out;
}

RankGroups equivalence_groups(const ExperimentGrid& grid, Metric metric, std::optional<PrevalenceGroup> group,
                              double alpha) {
    const auto datasets = grid.datasets(group);
    const auto methods = grid.methods();
    if (methods.size() < 2) {
        throw DataError("equivalence grouping needs at least two methods");
    }
    if (datasets.empty()) {
        throw DataError("no datasets in the requested prevalence group");
    }
    std::vector<std::vector<std::optional<double>>> values(methods.size());
    for (std::size_t m = 0; m < methods.size(); ++m) {
        for (const auto& d : datasets) {
            values[m].push_back(grid.mean(d, methods[m], metric));
        }
    }
    auto out = equivalence_groups(methods, values, alpha, lower_is_better(metric));
    out.metric = metric;
    out.group = group;
    return out;
}

void write_rank_groups_csv(const std::filesystem::path& path, std::span<const RankGroups> tables) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    csv::write_record(out, {"metric", "group", "rank_group", "method_ids", "representative_value"});
    for (const auto& t : tables) {
        const std::string group = t.group ? std::string(to_string(*t.group)) : "all";
        for (std::size_t i = 0; i < t.groups.size(); ++i) {
            std::string ids;
            for (int m : t.groups[i].methods) {
                ids += (ids.empty() ? "" : " ") + std::to_string(m);
            }
            csv::write_record(out, {std::string(to_string(t.metric)), group, std::to_string(i + 1), ids,
                                    csv::format_double(t.groups[i].best_mean)});
        }
    }
}

} // namespace screenkit
