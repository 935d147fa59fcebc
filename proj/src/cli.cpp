#include "screenkit/cli.hpp"

#include "screenkit/csv.hpp"
#include "screenkit/error.hpp"
#include "screenkit/relrank.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <set>

namespace screenkit::cli {

using json = nlohmann::json;
namespace fs = std::filesystem;

std::string_view to_string(ReportKind k) {
    switch (k) {
    case ReportKind::MetricTable:
        return "metric_table";
    case ReportKind::RankGroups:
        return "rank_groups";
    case ReportKind::AlHistogram:
        return "al_histogram";
    case ReportKind::InclusionCurve:
        return "inclusion_curve";
    }
    return "?";
}

ReportKind parse_report_kind(std::string_view s) {
    for (auto k : {ReportKind::MetricTable, ReportKind::RankGroups, ReportKind::AlHistogram,
                   ReportKind::InclusionCurve}) {
        if (to_string(k) == s) {
            return k;
        }
    }
    throw UsageError("unknown report kind '" + std::string(s) + "'");
}

fs::path manifest_path(const fs::path& out, bool directory) {
    return directory ? out / "manifest.json" : fs::path(out.string() + ".manifest.json");
}

namespace {

fs::path svg_beside(const fs::path& csv_path) {
    auto p = csv_path;
    p.replace_extension(".svg");
    return p;
}

std::vector<PrevalenceGroup> groups_present(const ExperimentGrid& grid) {
    std::set<PrevalenceGroup> seen;
    for (const auto& d : grid.datasets()) {
        if (auto g = grid.group(d)) {
            seen.insert(*g);
        }
    }
    return {seen.begin(), seen.end()};
}

} // namespace

std::vector<fs::path> emit_rank_groups(const ExperimentGrid& grid, Metric metric,
                                       std::optional<PrevalenceGroup> group, const fs::path& out, double alpha) {
    const auto table = equivalence_groups(grid, metric, group, alpha);
    write_rank_groups_csv(out, std::span<const RankGroups>(&table, 1));
    return {out};
}

std::vector<fs::path> emit_metric_table(const ExperimentGrid& grid, const fs::path& out, double alpha) {
    std::vector<std::optional<PrevalenceGroup>> groups;
    for (auto g : groups_present(grid)) {
        groups.emplace_back(g);
    }
    if (groups.empty()) {
        groups.emplace_back(std::nullopt);
    }
    std::vector<RankGroups> tables;
    for (auto metric : kAllMetrics) {
        for (auto g : groups) {
            tables.push_back(equivalence_groups(grid, metric, g, alpha));
        }
    }
    write_rank_groups_csv(out, tables);
    return {out};
}

std::vector<fs::path> emit_al_histogram(std::span<const double> fractions, const fs::path& out) {
    const auto h = screened_histogram(fractions);
    write_histogram_csv(out, h);
    write_histogram_svg(svg_beside(out), h);
    return {out, svg_beside(out)};
}

std::vector<fs::path> emit_inclusion_curve(const ALTrace& trace, const fs::path& out) {
    write_inclusion_csv(out, trace);
    write_inclusion_svg(svg_beside(out), trace);
    return {out, svg_beside(out)};
}

ALTrace load_trace_csv(const fs::path& path, std::optional<std::size_t> corpus_size) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open trace file: " + path.string());
    }
    std::vector<std::string> f;
    std::size_t line = 0;
    if (!csv::read_record(in, f, line) || f != std::vector<std::string>{"iteration", "screened", "found"}) {
        throw DataError(path.string() + ": not a trace CSV");
    }
    ALTrace t;
    while (csv::read_record(in, f, line)) {
        if (f.size() != 3) {
            throw DataError(path.string() + ": malformed row at line " + std::to_string(line));
        }
        try {
            t.steps.push_back({std::stoull(f[0]), std::stoull(f[1]), std::stoull(f[2])});
        } catch (const std::logic_error&) {
            throw DataError(path.string() + ": bad number at line " + std::to_string(line));
        }
    }
    if (t.steps.empty()) {
        throw DataError(path.string() + ": empty trace");
    }
    t.relevant = t.steps.back().found;
    t.corpus_size = corpus_size.value_or(t.steps.back().screened);
    return t;
}

namespace {

struct CorpusArgs {
    std::vector<std::string> paths;
    std::string format = "auto";
    std::string labeled_field = "label";
};

struct EmbedArgs {
    std::size_t dim = 100;
    std::size_t window = 5;
    std::size_t min_count = 15;
    std::size_t epochs = 5;
    std::string embeddings;
};

struct Common {
    std::uint64_t seed = 1;
    std::size_t workers = 0;
    std::string out;
};

/// What a subcommand produced, for the manifest.
struct Outcome {
    std::vector<fs::path> files;
    json details = json::object();
};

struct Command {
    CLI::App* app = nullptr;
    bool directory_output = false;
    std::function<Outcome()> run;
};

void add_corpus_options(CLI::App* app, CorpusArgs& a, bool many) {
    auto* opt = app->add_option("--corpus", a.paths, many ? "Corpus file(s) (JSONL or CSV)" : "Corpus file")
                    ->required();
    if (!many) {
        opt->expected(1);
    }
    app->add_option("--format", a.format, "jsonl, csv or auto (by extension)")
        ->check(CLI::IsMember({"auto", "jsonl", "csv"}))
        ->capture_default_str();
    app->add_option("--labeled-field", a.labeled_field, "Field holding the relevance label")->capture_default_str();
}

void add_embed_options(CLI::App* app, EmbedArgs& e) {
    app->add_option("--dim", e.dim, "Embedding dimension")->capture_default_str();
    app->add_option("--window", e.window, "Skip-gram context window")->capture_default_str();
    app->add_option("--min-count", e.min_count, "Minimum word count for the embedding vocabulary")
        ->capture_default_str();
    app->add_option("--epochs", e.epochs, "Skip-gram epochs")->capture_default_str();
    app->add_option("--embeddings", e.embeddings, "Pre-trained embedding table (TSV); skips training");
}

void add_common_options(CLI::App* app, Common& c, bool seeded = true, bool parallel = false) {
    if (seeded) {
        app->add_option("--seed", c.seed, "Random seed")->capture_default_str();
    }
    if (parallel) {
        app->add_option("--workers", c.workers, "Worker threads (default: SCREENKIT_WORKERS or 1)");
    }
    app->add_option("--out", c.out, "Output path")->required();
}

Corpus read_corpus(const std::string& path, const CorpusArgs& a) {
    CorpusFormat format;
    if (a.format == "auto") {
        format = fs::path(path).extension() == ".csv" ? CorpusFormat::Csv : CorpusFormat::Jsonl;
    } else {
        format = a.format == "csv" ? CorpusFormat::Csv : CorpusFormat::Jsonl;
    }
    return load_corpus(path, format, a.labeled_field);
}

SkipGramOptions skipgram_options(const EmbedArgs& e, std::uint64_t seed) {
    SkipGramOptions o;
    o.dim = e.dim;
    o.window = e.window;
    o.min_count = e.min_count;
    o.epochs = e.epochs;
    o.seed = seed;
    return o;
}

std::unique_ptr<FeatureContext> make_context(Corpus corpus, const EmbedArgs& e, std::uint64_t seed) {
    if (!e.embeddings.empty()) {
        return std::make_unique<FeatureContext>(std::move(corpus), EmbeddingTable::load_tsv(e.embeddings));
    }
    return std::make_unique<FeatureContext>(std::move(corpus), skipgram_options(e, seed));
}

std::size_t resolve_workers(std::size_t flag) {
    if (flag > 0) {
        return flag;
    }
    if (const char* env = std::getenv("SCREENKIT_WORKERS")) {
        try {
            const auto v = std::stoul(env);
            if (v > 0) {
                return v;
            }
        } catch (const std::logic_error&) {
        }
        throw UsageError(std::string("SCREENKIT_WORKERS must be a positive integer, got '") + env + "'");
    }
    return 1;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw DataError("cannot create output directory " + dir.string() + ": " + ec.message());
    }
}

void ensure_parent(const fs::path& file) {
    if (file.has_parent_path()) {
        ensure_dir(file.parent_path());
    }
}

json corpus_summary(const Corpus& c) {
    json j{{"name", c.name()},
           {"n", c.size()},
           {"labeled", c.labeled_count()},
           {"unlabeled", c.unlabeled_count()},
           {"relevant", c.relevant_count()}};
    if (c.fully_labeled()) {
        const auto p = prevalence(c);
        j["prevalence"] = p.fraction;
        j["group"] = std::string(to_string(p.group));
    }
    return j;
}

void write_features(const fs::path& path, const FeatureContext& ctx, FeatureKind kind) {
    const auto& m = ctx.matrix(kind);
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    out << "screenkit-features 1\tkind=" << to_string(kind) << "\trows=" << m.rows() << "\tcols=" << m.cols()
        << '\n';
    for (std::size_t r = 0; r < m.rows(); ++r) {
        out << ctx.corpus()[r].id;
        const auto idx = m.row_indices(r);
        const auto val = m.row_values(r);
        for (std::size_t k = 0; k < idx.size(); ++k) {
            out << '\t' << idx[k] << ':' << csv::format_double(val[k]);
        }
        out << '\n';
    }
}

struct TrainArgs {
    int method = 0;
    std::string loss = "hinge";
    std::string feature = "unibi";
    bool no_intercept = false;
    std::optional<double> c;
    std::optional<double> j;
    std::optional<double> epsilon;
    std::size_t max_iters = 1000;
};

void add_train_options(CLI::App* app, TrainArgs& t, bool full) {
    app->add_option("--method", t.method, "Method id from the registry (sets loss, intercept and feature)");
    app->add_option("--feature", t.feature, "unibi, w2v-row or w2v-col")
        ->check(CLI::IsMember({"unibi", "w2v-row", "w2v-col"}))
        ->capture_default_str();
    if (!full) {
        return;
    }
    app->add_option("--loss", t.loss, "hinge, cost_hinge, transductive, auc, kld or quadmean")
        ->check(CLI::IsMember({"hinge", "cost_hinge", "transductive", "auc", "kld", "quadmean"}))
        ->capture_default_str();
    app->add_flag("--no-intercept", t.no_intercept, "Train without an intercept (b=0)");
    app->add_option("--c", t.c, "Regularization C (default: resolved from the data)");
    app->add_option("--j", t.j, "Positive-class cost factor for cost_hinge (default: #irrelevant/#relevant)");
    app->add_option("--epsilon", t.epsilon, "Convergence tolerance");
    app->add_option("--max-iters", t.max_iters, "Iteration cap")->capture_default_str();
}

MethodSpec resolve_method(const TrainArgs& t, const CLI::App* app) {
    MethodSpec m;
    if (t.method != 0) {
        m = find_method(t.method);
        if (app->count("--feature") > 0) {
            m.feature = parse_feature_kind(t.feature);
        }
    } else {
        m.feature = parse_feature_kind(t.feature);
        m.config.loss = parse_loss(t.loss);
        m.config.use_intercept = !t.no_intercept;
        m.name = std::string(to_string(m.config.loss));
    }
    if (t.c) {
        m.config.cost_c = t.c;
    }
    if (t.j) {
        m.config.j_ratio = t.j;
    }
    if (t.epsilon) {
        m.config.epsilon = t.epsilon;
    }
    // score registers only --method and --feature.
    if (const auto* opt = app->get_option_no_throw("--max-iters"); opt && opt->count() > 0) {
        m.config.max_iters = t.max_iters;
    }
    return m;
}

void write_manifest(const fs::path& path, const std::string& command, const std::vector<std::string>& argv,
                    const std::string& config, const std::string& resolved, const Common& common,
                    const Outcome& outcome) {
    json files = json::array();
    for (const auto& f : outcome.files) {
        files.push_back(f.generic_string());
    }
    json m{{"tool", "screenkit"},
           {"version", std::string(kVersion)},
           {"command", command},
           {"argv", argv},
           {"config", config.empty() ? json(nullptr) : json(config)},
           {"resolved", resolved},
           {"seed", common.seed},
           {"output", common.out},
           {"files", files},
           {"schemas",
            {{"grid", 1},
             {"grid_datasets", 1},
             {"metric_rows", 1},
             {"rank_groups", 1},
             {"ratings", 1},
             {"scores", 1},
             {"al_trace", 1},
             {"al_aggregate", 1},
             {"histogram", 1},
             {"model", 1},
             {"features", 1},
             {"embedding", 1}}},
           {"details", outcome.details}};
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write manifest " + path.string());
    }
    out << m.dump(2) << '\n';
}

std::vector<std::string> replay_args(const std::vector<std::string>& args) {
    // --replay <manifest> [--out <path>]
    if (args.size() < 2) {
        throw UsageError("--replay needs a manifest path");
    }
    std::optional<std::string> out_override;
    for (std::size_t i = 2; i < args.size(); ++i) {
        if (args[i] == "--out" && i + 1 < args.size()) {
            out_override = args[++i];
        } else if (args[i].rfind("--out=", 0) == 0) {
            out_override = args[i].substr(6);
        } else {
            throw UsageError("--replay accepts only --out, got '" + args[i] + "'");
        }
    }
    std::ifstream in(args[1]);
    if (!in) {
        throw DataError("cannot open manifest: " + args[1]);
    }
    json m;
    try {
        m = json::parse(in);
    } catch (const json::exception& e) {
        throw DataError("malformed manifest " + args[1] + ": " + e.what());
    }
    if (!m.contains("argv") || !m["argv"].is_array()) {
        throw DataError("manifest " + args[1] + " has no argv");
    }
    auto argv = m["argv"].get<std::vector<std::string>>();
    if (out_override) {
        bool replaced = false;
        for (std::size_t i = 0; i < argv.size(); ++i) {
            if (argv[i] == "--out" && i + 1 < argv.size()) {
                argv[i + 1] = *out_override;
                replaced = true;
            } else if (argv[i].rfind("--out=", 0) == 0) {
                argv[i] = "--out=" + *out_override;
                replaced = true;
            }
        }
        if (!replaced) {
            argv.push_back("--out");
            argv.push_back(*out_override);
        }
    }
    return argv;
}

int run_app(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"screenkit: citation screening with imbalance-aware linear classifiers", "screenkit"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);
    std::string config_path;
    app.set_config("--config", "", "TOML/INI file supplying option values");

    std::vector<Command> commands;
    Common common;
    CorpusArgs corpus;
    EmbedArgs embed;
    TrainArgs train_args;

    // ingest
    {
        auto* sub = app.add_subcommand("ingest", "Validate a corpus and write it as normalized JSONL");
        add_corpus_options(sub, corpus, false);
        add_common_options(sub, common, false);
        commands.push_back({sub, false, [&] {
                                const auto c = read_corpus(corpus.paths.at(0), corpus);
                                ensure_parent(common.out);
                                save_corpus_jsonl(c, common.out);
                                const auto summary = corpus_summary(c);
                                out << summary.dump() << '\n';
                                return Outcome{{common.out}, summary};
                            }});
    }
    // embed
    {
        auto* sub = app.add_subcommand("embed", "Train skip-gram word embeddings on corpus text");
        add_corpus_options(sub, corpus, true);
        add_embed_options(sub, embed);
        add_common_options(sub, common);
        commands.push_back({sub, false, [&] {
                                std::vector<Corpus> corpora;
                                for (const auto& p : corpus.paths) {
                                    corpora.push_back(read_corpus(p, corpus));
                                }
                                const auto table = train_skipgram(corpora, skipgram_options(embed, common.seed));
                                ensure_parent(common.out);
                                table.save_tsv(common.out);
                                return Outcome{{common.out}, json{{"words", table.size()}, {"dim", table.dim()}}};
                            }});
    }
    // featurize
    std::string kind = "unibi";
    {
        auto* sub = app.add_subcommand("featurize", "Write the feature matrix of a corpus");
        add_corpus_options(sub, corpus, false);
        add_embed_options(sub, embed);
        sub->add_option("--kind", kind, "unibi, w2v-row or w2v-col")
            ->check(CLI::IsMember({"unibi", "w2v-row", "w2v-col"}))
            ->capture_default_str();
        add_common_options(sub, common);
        commands.push_back({sub, false, [&] {
                                auto ctx = make_context(read_corpus(corpus.paths.at(0), corpus), embed, common.seed);
                                const auto k = parse_feature_kind(kind);
                                ensure_parent(common.out);
                                write_features(common.out, *ctx, k);
                                Outcome o{{common.out}, {}};
                                if (k == FeatureKind::UniBi) {
                                    const fs::path vocab = common.out + ".vocab.tsv";
                                    ctx->vocabulary().save_tsv(vocab);
                                    o.files.push_back(vocab);
                                } else {
                                    o.details["uncovered"] = ctx->uncovered();
                                }
                                const auto& m = ctx->matrix(k);
                                o.details["rows"] = m.rows();
                                o.details["cols"] = m.cols();
                                return o;
                            }});
    }
    // train
    {
        auto* sub = app.add_subcommand("train", "Train a linear model on the labeled citations of a corpus");
        add_corpus_options(sub, corpus, false);
        add_embed_options(sub, embed);
        add_train_options(sub, train_args, true);
        add_common_options(sub, common);
        commands.push_back({sub, false, [&, sub] {
                                const auto method = resolve_method(train_args, sub);
                                auto ctx = make_context(read_corpus(corpus.paths.at(0), corpus), embed, common.seed);
                                std::vector<std::size_t> l_rows, u_rows;
                                std::vector<Label> labels;
                                for (std::size_t i = 0; i < ctx->corpus().size(); ++i) {
                                    if (auto l = ctx->corpus()[i].label) {
                                        l_rows.push_back(i);
                                        labels.push_back(*l);
                                    } else {
                                        u_rows.push_back(i);
                                    }
                                }
                                const auto& all = ctx->matrix(method.feature);
                                const auto lx = all.select_rows(l_rows);
                                const auto ux = all.select_rows(u_rows);
                                const auto outcome = train(lx, labels, method.config, &ux);
                                for (const auto& w : outcome.diagnostics.warnings) {
                                    err << "warning: " << w << '\n';
                                }
                                ensure_parent(common.out);
                                save_model(outcome.model, common.out);
                                return Outcome{{common.out},
                                               json{{"feature", std::string(to_string(method.feature))},
                                                    {"loss", std::string(to_string(method.config.loss))},
                                                    {"iterations", outcome.diagnostics.iterations},
                                                    {"converged", outcome.diagnostics.converged}}};
                            }});
    }
    // score
    std::string model_path;
    {
        auto* sub = app.add_subcommand("score", "Score every citation of a corpus with a trained model");
        add_corpus_options(sub, corpus, false);
        add_embed_options(sub, embed);
        add_train_options(sub, train_args, false);
        sub->add_option("--model", model_path, "Model file written by train")->required();
        add_common_options(sub, common);
        commands.push_back({sub, false, [&, sub] {
                                const auto method = resolve_method(train_args, sub);
                                const auto model = load_model(model_path);
                                auto ctx = make_context(read_corpus(corpus.paths.at(0), corpus), embed, common.seed);
                                const auto scores = score_citations(model, ctx->matrix(method.feature));
                                ensure_parent(common.out);
                                std::ofstream f(common.out, std::ios::binary);
                                if (!f) {
                                    throw DataError("cannot write " + common.out);
                                }
                                csv::write_record(f, {"id", "score", "predicted"});
                                const auto pred = predict(model, scores);
                                for (std::size_t i = 0; i < scores.size(); ++i) {
                                    csv::write_record(f, {ctx->corpus()[i].id, csv::format_double(scores[i]),
                                                          std::to_string(sign(pred[i]))});
                                }
                                return Outcome{{common.out}, {}};
                            }});
    }
    // rate
    EnsembleConfig ensemble;
    {
        auto* sub = app.add_subcommand("rate", "Five-star RelRank ratings for the unlabeled citations");
        add_corpus_options(sub, corpus, false);
        add_embed_options(sub, embed);
        sub->add_option("--st", ensemble.separation_threshold, "Separation threshold ST")->capture_default_str();
        sub->add_option("--mr", ensemble.max_range, "Normalized-rank range MR")->capture_default_str();
        add_common_options(sub, common);
        commands.push_back({sub, false, [&] {
                                auto ctx = make_context(read_corpus(corpus.paths.at(0), corpus), embed, common.seed);
                                const auto ratings = relrank(*ctx, ensemble);
                                ensure_parent(common.out);
                                write_ratings_csv(common.out, ratings, ensemble);
                                std::array<std::size_t, 5> counts{};
                                for (int s : assign_stars(ratings, ensemble)) {
                                    ++counts[static_cast<std::size_t>(s - 1)];
                                }
                                return Outcome{{common.out}, json{{"rated", ratings.size()}, {"stars", counts}}};
                            }});
    }
    // evaluate
    GridOptions grid_opts;
    std::string methods_spec = "all";
    bool write_rows = true;
    {
        auto* sub = app.add_subcommand("evaluate", "Repeated stratified CV of methods over corpora");
        add_corpus_options(sub, corpus, true);
        add_embed_options(sub, embed);
        sub->add_option("--methods", methods_spec, "'all' or comma-separated method ids")->capture_default_str();
        sub->add_option("--reps", grid_opts.repetitions, "CV repetitions")->capture_default_str();
        sub->add_option("--folds", grid_opts.k, "Folds per repetition")->capture_default_str();
        sub->add_flag("!--no-metric-rows", write_rows, "Skip the per-fold metric rows CSV");
        add_common_options(sub, common, true, true);
        commands.push_back({sub, true, [&] {
                                const auto methods = parse_method_list(methods_spec);
                                std::vector<std::unique_ptr<FeatureContext>> contexts;
                                std::set<std::string> names;
                                for (const auto& p : corpus.paths) {
                                    auto c = read_corpus(p, corpus);
                                    if (!names.insert(c.name()).second) {
                                        throw UsageError("two corpora share the name '" + c.name() + "'");
                                    }
                                    contexts.push_back(make_context(std::move(c), embed, common.seed));
                                }
                                std::vector<const FeatureContext*> ptrs;
                                for (const auto& c : contexts) {
                                    ptrs.push_back(c.get());
                                }
                                grid_opts.seed = common.seed;
                                grid_opts.workers = resolve_workers(common.workers);
                                const auto run = run_experiment_grid(ptrs, methods, grid_opts);
                                for (const auto& w : run.warnings) {
                                    err << "warning: " << w << '\n';
                                }
                                const fs::path dir = common.out;
                                ensure_dir(dir);
                                run.grid.save_csv(dir / "grid.csv");
                                Outcome o{{dir / "grid.csv", ExperimentGrid::datasets_path(dir / "grid.csv")}, {}};
                                if (write_rows) {
                                    write_metric_rows_csv(dir / "metric_rows.csv", run.records);
                                    o.files.push_back(dir / "metric_rows.csv");
                                }
                                std::size_t failed = 0;
                                for (const auto& r : run.records) {
                                    failed += r.failed ? 1 : 0;
                                }
                                o.details = json{{"evaluations", run.records.size()}, {"failed", failed}};
                                return o;
                            }});
    }
    // rankgroups
    std::string grid_path, metric_name = "all", group_name;
    double alpha = 0.05;
    {
        auto* sub = app.add_subcommand("rankgroups", "Statistical equivalence groups from an experiment grid");
        sub->add_option("--grid", grid_path, "grid.csv written by evaluate")->required();
        sub->add_option("--metric", metric_name, "Metric name or 'all'")->capture_default_str();
        sub->add_option("--group", group_name, "low, mid, high or all (default: each group present)")
            ->check(CLI::IsMember({"low", "mid", "high", "all"}));
        sub->add_option("--alpha", alpha, "Significance level")->capture_default_str();
        add_common_options(sub, common, false);
        commands.push_back({sub, false, [&] {
                                const auto grid = ExperimentGrid::load_csv(grid_path);
                                std::vector<Metric> metrics;
                                if (metric_name == "all") {
                                    metrics.assign(kAllMetrics.begin(), kAllMetrics.end());
                                } else {
                                    metrics.push_back(parse_metric(metric_name));
                                }
                                std::vector<std::optional<PrevalenceGroup>> groups;
                                if (group_name == "all") {
                                    groups.emplace_back(std::nullopt);
                                } else if (!group_name.empty()) {
                                    groups.emplace_back(parse_prevalence_group(group_name));
                                } else {
                                    for (auto g : groups_present(grid)) {
                                        groups.emplace_back(g);
                                    }
                                    if (groups.empty()) {
                                        groups.emplace_back(std::nullopt);
                                    }
                                }
                                std::vector<RankGroups> tables;
                                const fs::path out_path = common.out;
                                auto anova_path = out_path;
                                anova_path.replace_extension(".anova.csv");
                                ensure_parent(out_path);
                                std::ofstream anova(anova_path, std::ios::binary);
                                if (!anova) {
                                    throw DataError("cannot write " + anova_path.string());
                                }
                                csv::write_record(anova, {"metric", "group", "method_f", "method_p", "data_f",
                                                          "data_p", "gate"});
                                for (auto metric : metrics) {
                                    for (auto g : groups) {
                                        tables.push_back(equivalence_groups(grid, metric, g, alpha));
                                        const std::string gname = g ? std::string(to_string(*g)) : "all";
                                        try {
                                            const auto a = anova_two_factor(grid, metric, g);
                                            csv::write_record(anova, {std::string(to_string(metric)), gname,
                                                                      csv::format_double(a.method_f),
                                                                      csv::format_double(a.method_p),
                                                                      csv::format_double(a.data_f),
                                                                      csv::format_double(a.data_p),
                                                                      a.method_p < alpha ? "pass" : "fail"});
                                        } catch (const DataError& e) {
                                            err << "note: ANOVA skipped for " << to_string(metric) << "/" << gname
                                                << ": " << e.what() << '\n';
                                            csv::write_record(anova, {std::string(to_string(metric)), gname, "NA",
                                                                      "NA", "NA", "NA", "NA"});
                                        }
                                    }
                                }
                                write_rank_groups_csv(out_path, tables);
                                return Outcome{{out_path, anova_path}, json{{"tables", tables.size()}}};
                            }});
    }
    // simulate-al
    ALConfig al;
    int al_method = 21;
    {
        auto* sub = app.add_subcommand("simulate-al", "Certainty-sampling active-learning simulation");
        add_corpus_options(sub, corpus, true);
        add_embed_options(sub, embed);
        sub->add_option("--repeats", al.repeats, "Runs per corpus")->capture_default_str();
        sub->add_option("--batch", al.batch_size, "Citations revealed per iteration")->capture_default_str();
        sub->add_option("--seed-relevant", al.seed_relevant, "Relevant citations in the seed set")
            ->capture_default_str();
        sub->add_option("--seed-irrelevant", al.seed_irrelevant, "Irrelevant citations in the seed set")
            ->capture_default_str();
        sub->add_option("--method", al_method, "Method id used for ranking")->capture_default_str();
        add_common_options(sub, common, true, true);
        commands.push_back({sub, true, [&] {
                                al.method = find_method(al_method);
                                al.seed = common.seed;
                                al.workers = resolve_workers(common.workers);
                                const fs::path dir = common.out;
                                ensure_dir(dir / "traces");
                                Outcome o;
                                std::ofstream summary(dir / "summary.csv", std::ios::binary);
                                if (!summary) {
                                    throw DataError("cannot write " + (dir / "summary.csv").string());
                                }
                                csv::write_record(summary, {"review", "runs", "mean_screened_fraction", "stddev"});
                                std::vector<double> means;
                                for (const auto& p : corpus.paths) {
                                    auto ctx = make_context(read_corpus(p, corpus), embed, common.seed);
                                    const auto agg = simulate(*ctx, al);
                                    const auto name = ctx->corpus().name();
                                    const auto agg_path = dir / (name + ".runs.csv");
                                    write_aggregate_csv(agg_path, name, agg);
                                    const auto trace_path = dir / "traces" / (name + ".run0.csv");
                                    write_trace_csv(trace_path, agg.traces.front());
                                    const auto curve = emit_inclusion_curve(agg.traces.front(),
                                                                            dir / "traces" / (name + ".inclusion.csv"));
                                    csv::write_record(summary, {name, std::to_string(agg.fractions.size()),
                                                                csv::format_double(agg.mean),
                                                                csv::format_double(agg.stddev)});
                                    means.push_back(agg.mean);
                                    o.files.push_back(agg_path);
                                    o.files.push_back(trace_path);
                                    o.files.insert(o.files.end(), curve.begin(), curve.end());
                                }
                                summary.close();
                                o.files.push_back(dir / "summary.csv");
                                const auto hist = emit_al_histogram(means, dir / "histogram.csv");
                                o.files.insert(o.files.end(), hist.begin(), hist.end());
                                o.details = json{{"reviews", means.size()}, {"repeats", al.repeats}};
                                return o;
                            }});
    }
    // report
    std::string report_kind, input_path;
    std::optional<std::size_t> corpus_size;
    {
        auto* sub = app.add_subcommand("report", "Render tables and plots from earlier outputs");
        sub->add_option("--kind", report_kind, "metric_table, rank_groups, al_histogram or inclusion_curve")
            ->required()
            ->check(CLI::IsMember({"metric_table", "rank_groups", "al_histogram", "inclusion_curve"}));
        sub->add_option("--input", input_path,
                        "grid.csv (metric_table, rank_groups), summary.csv (al_histogram) or a trace CSV")
            ->required();
        sub->add_option("--metric", metric_name, "Metric for rank_groups")->capture_default_str();
        sub->add_option("--group", group_name, "Prevalence group for rank_groups")
            ->check(CLI::IsMember({"low", "mid", "high", "all"}));
        sub->add_option("--alpha", alpha, "Significance level")->capture_default_str();
        sub->add_option("--corpus-size", corpus_size, "Corpus size for inclusion_curve");
        add_common_options(sub, common, false);
        commands.push_back({sub, false, [&] {
                                const fs::path out_path = common.out;
                                ensure_parent(out_path);
                                Outcome o;
                                switch (parse_report_kind(report_kind)) {
                                case ReportKind::MetricTable:
                                    o.files = emit_metric_table(ExperimentGrid::load_csv(input_path), out_path, alpha);
                                    break;
                                case ReportKind::RankGroups: {
                                    if (metric_name == "all") {
                                        throw UsageError("rank_groups needs a single --metric");
                                    }
                                    std::optional<PrevalenceGroup> g;
                                    if (!group_name.empty() && group_name != "all") {
                                        g = parse_prevalence_group(group_name);
                                    }
                                    o.files = emit_rank_groups(ExperimentGrid::load_csv(input_path),
                                                               parse_metric(metric_name), g, out_path, alpha);
                                    break;
                                }
                                case ReportKind::AlHistogram: {
                                    std::ifstream in(input_path, std::ios::binary);
                                    if (!in) {
                                        throw DataError("cannot open " + input_path);
                                    }
                                    std::vector<std::string> f;
                                    std::size_t line = 0;
                                    if (!csv::read_record(in, f, line) || f.size() < 3 ||
                                        f[2] != "mean_screened_fraction") {
                                        throw DataError(input_path + ": not an active-learning summary CSV");
                                    }
                                    std::vector<double> fractions;
                                    while (csv::read_record(in, f, line)) {
                                        if (f.size() < 3) {
                                            throw DataError(input_path + ": malformed row at line " +
                                                            std::to_string(line));
                                        }
                                        fractions.push_back(csv::parse_double(f[2]));
                                    }
                                    o.files = emit_al_histogram(fractions, out_path);
                                    break;
                                }
                                case ReportKind::InclusionCurve:
                                    o.files = emit_inclusion_curve(load_trace_csv(input_path, corpus_size), out_path);
                                    break;
                                }
                                return o;
                            }});
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return 1;
    }

    for (auto& cmd : commands) {
        if (!cmd.app->parsed()) {
            continue;
        }
        if (auto* cfg = app.get_config_ptr(); cfg && cfg->count() > 0) {
            config_path = cfg->as<std::string>();
        }
        const Outcome outcome = cmd.run();
        const auto resolved = cmd.app->config_to_str(true, false);
        write_manifest(manifest_path(common.out, cmd.directory_output), cmd.app->get_name(), args, config_path,
                       resolved, common, outcome);
        return 0;
    }
    return 1;
}

} // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    try {
        if (!args.empty() && args.front() == "--replay") {
            return run_app(replay_args(args), out, err);
        }
        return run_app(args, out, err);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return 1;
    } catch (const DataError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
}

} // namespace screenkit::cli
