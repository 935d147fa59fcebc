#include "screenkit/cli.hpp"
#include "screenkit/error.hpp"
#include "screenkit/rng.hpp"
#include "synth.hpp"
#include "test_util.hpp"

#include <doctest.h>
#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <sstream>

using namespace screenkit;

TEST_SUITE_BEGIN("cli");

namespace {

struct Run {
    int code = 0;
    std::string out;
    std::string err;
};

Run run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli::dispatch(args, out, err);
    return {code, out.str(), err.str()};
}

// Text corpus plus the topic-axis embedding table on disk.
struct Fixture {
    testutil::TempDir dir{"cli"};
    std::string corpus;
    std::string labeled;
    std::string embeddings;

    Fixture() {
        synth::TextSpec spec;
        spec.name = "rev";
        spec.n = 200;
        spec.relevant = 20;
        spec.signal = 0.5;
        spec.hard_negative_rate = 0.0;
        spec.unlabeled = 60;
        corpus = (dir / "rev.jsonl").string();
        save_corpus_jsonl(synth::make_text_corpus(spec), corpus);
        spec.unlabeled = 0;
        spec.name = "lab";
        labeled = (dir / "lab.jsonl").string();
        save_corpus_jsonl(synth::make_text_corpus(spec), labeled);
        embeddings = (dir / "emb.tsv").string();
        synth::topic_axis_table().save_tsv(embeddings);
    }
};

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> f;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) {
            f.push_back(cell);
        }
        rows.push_back(f);
    }
    return rows;
}

} // namespace

TEST_CASE("exit codes") {
    auto r = run({"rate", "--corpus", "x.jsonl", "--out", "r.csv", "--bogus"});
    CHECK(r.code == 1);
    CHECK(r.err.find("--bogus") != std::string::npos);
    CHECK(run({"frobnicate"}).code == 1);
    CHECK(run({}).code == 1);

    testutil::TempDir dir("cli-missing");
    const auto missing = (dir / "nope.jsonl").string();
    r = run({"evaluate", "--corpus", missing, "--out", (dir / "ev").string()});
    CHECK(r.code == 2);
    CHECK(r.err.find(missing) != std::string::npos);

    CHECK(run({"report", "--kind", "al_histogram", "--input", missing, "--out", (dir / "h.csv").string()}).code == 2);
    CHECK(run({"--replay"}).code == 1);
    CHECK(run({"--replay", missing}).code == 2);
    CHECK(run({"--version"}).code == 0);
}

TEST_CASE("the installed binary reports the same exit codes") {
    const std::string bin = SCREENKIT_CLI_PATH;
    testutil::TempDir dir("cli-proc");
    const auto missing = (dir / "absent.jsonl").string();
    const auto log = (dir / "log.txt").string();
    int status = std::system((bin + " evaluate --corpus " + missing + " --out " + (dir / "e").string() + " 2>" + log).c_str());
    CHECK(WEXITSTATUS(status) == 2);
    CHECK(testutil::slurp(log).find(missing) != std::string::npos);
    status = std::system((bin + " rate --nope 2>" + log).c_str());
    CHECK(WEXITSTATUS(status) == 1);
}

TEST_CASE("rate writes ratings and a manifest") {
    Fixture fx;
    const auto out = (fx.dir / "ratings.csv").string();
    const auto r = run({"rate", "--corpus", fx.corpus, "--labeled-field", "label", "--embeddings", fx.embeddings,
                        "--out", out});
    REQUIRE(r.code == 0);
    const auto rows = csv_rows(testutil::slurp(out));
    REQUIRE(rows.size() == 61);
    CHECK(rows[0] == std::vector<std::string>{"id", "score", "nv", "fv", "rs", "ns", "stars"});
    for (std::size_t i = 2; i < rows.size(); ++i) {
        REQUIRE(std::stod(rows[i][1]) <= std::stod(rows[i - 1][1]));
    }
    const auto manifest = nlohmann::json::parse(testutil::slurp(cli::manifest_path(out, false)));
    CHECK(manifest["command"] == "rate");
    CHECK(manifest["argv"].size() == 9);
    CHECK(manifest.contains("version"));
    CHECK(cli::manifest_path("d", true) == std::filesystem::path("d") / "manifest.json");
}

TEST_CASE("train then score") {
    Fixture fx;
    const auto model = (fx.dir / "m.txt").string();
    REQUIRE(run({"train", "--corpus", fx.corpus, "--loss", "cost_hinge", "--max-iters", "500", "--out", model}).code ==
            0);
    const auto scores = (fx.dir / "s.csv").string();
    const auto r = run({"score", "--corpus", fx.corpus, "--model", model, "--out", scores});
    REQUIRE(r.code == 0);
    const auto rows = csv_rows(testutil::slurp(scores));
    REQUIRE(rows.size() == 201);
    CHECK(rows[0] == std::vector<std::string>{"id", "score", "predicted"});
    CHECK(run({"score", "--corpus", fx.corpus, "--model", model, "--max-iters", "3", "--out", scores}).code == 1);
}

TEST_CASE("evaluate and simulate-al outputs replay byte-identically") {
    Fixture fx;
    const auto ev = (fx.dir / "ev").string();
    auto r = run({"evaluate", "--corpus", fx.labeled, "--embeddings", fx.embeddings, "--methods", "5,21", "--reps",
                  "2", "--folds", "2", "--seed", "3", "--out", ev});
    REQUIRE(r.code == 0);
    const auto grid = ExperimentGrid::load_csv(fx.dir / "ev" / "grid.csv");
    CHECK(grid.methods() == std::vector<int>{5, 21});
    CHECK(grid.cell("lab", 5, Metric::Accuracy)->n_defined == 4);
    CHECK(csv_rows(testutil::slurp(fx.dir / "ev" / "metric_rows.csv")).size() > 4);

    const auto again = (fx.dir / "ev2").string();
    r = run({"--replay", (fx.dir / "ev" / "manifest.json").string(), "--out", again});
    REQUIRE(r.code == 0);
    for (const char* f : {"grid.csv", "grid.datasets.csv", "metric_rows.csv"}) {
        CHECK(testutil::slurp(fx.dir / "ev" / f) == testutil::slurp(fx.dir / "ev2" / f));
    }

    const auto al = (fx.dir / "al").string();
    r = run({"simulate-al", "--corpus", fx.labeled, "--embeddings", fx.embeddings, "--repeats", "3", "--out", al});
    REQUIRE(r.code == 0);
    r = run({"--replay", (fx.dir / "al" / "manifest.json").string(), "--out", (fx.dir / "al2").string()});
    REQUIRE(r.code == 0);
    for (const char* f : {"summary.csv", "lab.runs.csv", "histogram.csv", "traces/lab.run0.csv"}) {
        CHECK(testutil::slurp(fx.dir / "al" / f) == testutil::slurp(fx.dir / "al2" / f));
    }
    const auto hist = csv_rows(testutil::slurp(fx.dir / "al" / "histogram.csv"));
    REQUIRE(hist.size() == 11);
    std::size_t total = 0;
    for (std::size_t i = 1; i < hist.size(); ++i) {
        total += std::stoul(hist[i][2]);
    }
    CHECK(total == 1);
}

TEST_CASE("rankgroups on a constructed grid") {
    ExperimentGrid g;
    Rng rng(4);
    for (int d = 0; d < 20; ++d) {
        const auto name = "D" + std::to_string(d);
        const double base = 0.5 + 0.2 * rng.normal();
        const double wobble = d % 2 == 0 ? 0.01 : -0.01;
        g.set(name, 1, Metric::Auc, {base + 0.3 + 0.02 * rng.normal(), 4});
        g.set(name, 2, Metric::Auc, {base + wobble, 4});
        g.set(name, 3, Metric::Auc, {base - wobble, 4});
        g.set_group(name, PrevalenceGroup::Low);
    }
    testutil::TempDir dir("cli-rg");
    g.save_csv(dir / "grid.csv");
    const auto out = (dir / "t4.csv").string();
    const auto r = run({"rankgroups", "--grid", (dir / "grid.csv").string(), "--metric", "auc", "--group", "low",
                        "--out", out});
    REQUIRE(r.code == 0);
    const auto rows = csv_rows(testutil::slurp(out));
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == std::vector<std::string>{"metric", "group", "rank_group", "method_ids", "representative_value"});
    CHECK(rows[1][0] == "auc");
    CHECK(rows[1][1] == "low");
    CHECK(rows[1][2] == "1");
    CHECK(rows[1][3] == "1");
    CHECK(rows[2][2] == "2");
    CHECK(rows[2][3] == "2 3");
    CHECK(std::filesystem::exists(dir / "t4.anova.csv"));

    // The same table through the report command.
    const auto rep = (dir / "rep.csv").string();
    REQUIRE(run({"report", "--kind", "rank_groups", "--input", (dir / "grid.csv").string(), "--metric", "auc",
                 "--group", "low", "--out", rep})
                .code == 0);
    CHECK(testutil::slurp(rep) == testutil::slurp(out));
    const auto table = (dir / "table.csv").string();
    REQUIRE(run({"report", "--kind", "metric_table", "--input", (dir / "grid.csv").string(), "--out", table}).code ==
            0);
    CHECK(testutil::slurp(table).find("\nauc,low,2,2 3,") != std::string::npos);
}

TEST_CASE("report kinds") {
    CHECK(cli::parse_report_kind("inclusion_curve") == cli::ReportKind::InclusionCurve);
    CHECK(cli::to_string(cli::ReportKind::AlHistogram) == "al_histogram");
    CHECK_THROWS_AS(cli::parse_report_kind("pie"), UsageError);

    testutil::TempDir dir("cli-report");
    const std::vector<double> fractions{0.35, 0.45, 0.45};
    const auto files = cli::emit_al_histogram(fractions, dir / "h.csv");
    CHECK(files.size() == 2);
    const auto hist = csv_rows(testutil::slurp(dir / "h.csv"));
    REQUIRE(hist.size() == 11);
    std::size_t total = 0;
    for (std::size_t i = 1; i < hist.size(); ++i) {
        total += std::stoul(hist[i][2]);
    }
    CHECK(total == 3);

    ALTrace t;
    t.corpus_size = 400;
    t.relevant = 12;
    t.steps = {{0, 50, 5}, {1, 100, 9}, {2, 150, 11}, {3, 200, 12}};
    cli::emit_inclusion_curve(t, dir / "inc.csv");
    CHECK(testutil::slurp(dir / "inc.csv") == "screened,remaining_relevant\n50,7\n100,3\n150,1\n200,0\n");
    CHECK(std::filesystem::exists(dir / "inc.svg"));

    write_trace_csv(dir / "trace.csv", t);
    const auto back = cli::load_trace_csv(dir / "trace.csv", 400);
    CHECK(back.relevant == 12);
    CHECK(back.corpus_size == 400);
    REQUIRE(back.steps.size() == 4);
    CHECK(back.steps[2].found == 11);
    CHECK(cli::load_trace_csv(dir / "trace.csv").corpus_size == 200);

    // The command-line path for both plots.
    REQUIRE(run({"report", "--kind", "inclusion_curve", "--input", (dir / "trace.csv").string(), "--corpus-size",
                 "400", "--out", (dir / "inc2.csv").string()})
                .code == 0);
    CHECK(testutil::slurp(dir / "inc2.csv") == testutil::slurp(dir / "inc.csv"));
    std::ofstream(dir / "summary.csv") << "review,runs,mean_screened_fraction,stddev\nA,5,0.35,0\nB,5,0.45,0\nC,5,1,0\n";
    REQUIRE(run({"report", "--kind", "al_histogram", "--input", (dir / "summary.csv").string(), "--out",
                 (dir / "h2.csv").string()})
                .code == 0);
    const auto h2 = testutil::slurp(dir / "h2.csv");
    CHECK(h2.find("\n30,40,1\n40,50,1\n") != std::string::npos);
    CHECK(h2.find("\n90,100,1\n") != std::string::npos);
}

TEST_SUITE_END();
