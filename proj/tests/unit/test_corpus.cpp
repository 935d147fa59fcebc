#include "screenkit/corpus.hpp"
#include "screenkit/csv.hpp"
#include "screenkit/error.hpp"
#include "screenkit/rng.hpp"
#include "synth.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

using namespace screenkit;

TEST_SUITE_BEGIN("corpus");
using testutil::TempDir;

namespace {

Corpus labeled(std::size_t n, std::size_t relevant) {
    std::vector<Citation> c;
    for (std::size_t i = 0; i < n; ++i) {
        c.push_back({"c" + std::to_string(i), "title " + std::to_string(i), "",
                     i < relevant ? Label::Relevant : Label::Irrelevant});
    }
    return Corpus("t", std::move(c));
}

} // namespace

TEST_CASE("load_corpus counts labeled and unlabeled records") {
    TempDir dir("corpus");
    const auto p = dir.write("a.jsonl", R"({"id":"a","title":"T1","abstract":"x","label":1}
{"id":"b","title":"T2","abstract":"y"}
{"id":"c","title":"T3","abstract":"z","label":null}
)");
    const auto c = load_corpus(p);
    CHECK(c.size() == 3);
    CHECK(c.labeled_count() == 1);
    CHECK(c.unlabeled_count() == 2);
    CHECK(c.name() == "a");
    CHECK(c[0].id == "a");
    CHECK(c[2].id == "c");
    CHECK(c.find("b") == std::optional<std::size_t>(1));
}

TEST_CASE("load_corpus rejects duplicates, malformed records and empty files") {
    TempDir dir("corpus");
    const auto dup = dir.write("dup.jsonl", R"({"id":"a","title":"t","abstract":"x"}
{"id":"a","title":"u","abstract":"y"}
)");
    CHECK_THROWS_WITH_AS(load_corpus(dup), "duplicate id: a", DataError);

    const auto bad = dir.write("bad.jsonl", R"({"id":"a","title":"t","abstract":"x"}
{"id":"b","title":
)");
    try {
        load_corpus(bad);
        FAIL("expected an error");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }

    const auto missing_field = dir.write("nofield.jsonl", R"({"id":"a","abstract":"x"})");
    CHECK_THROWS_AS(load_corpus(missing_field), DataError);

    const auto bad_label = dir.write("label.jsonl", R"({"id":"a","title":"t","abstract":"x","label":2})");
    CHECK_THROWS_AS(load_corpus(bad_label), DataError);

    const auto empty = dir.write("empty.jsonl", "");
    CHECK_THROWS_AS(load_corpus(empty), DataError);

    CHECK_THROWS_WITH_AS(load_corpus(dir / "nope.jsonl"),
                         doctest::Contains("nope.jsonl"), DataError);
}

TEST_CASE("text invariants: blank text rejected, title-only accepted") {
    CHECK_THROWS_AS(Corpus("x", {{"a", "  ", "\t", std::nullopt}}), DataError);
    CHECK_THROWS_AS(Corpus("x", {{"", "t", "a", std::nullopt}}), DataError);
    CHECK_NOTHROW(Corpus("x", {{"a", "title only", "", std::nullopt}}));
}

TEST_CASE("csv corpus with quoted fields and a custom label column") {
    TempDir dir("corpus");
    const auto p = dir.write("c.csv", "id,title,abstract,rel\n"
                                      "1,\"A, title\",\"multi\nline\",1\n"
                                      "2,B,\"has \"\"quotes\"\"\",-1\n"
                                      "3,C,plain,\n");
    const auto c = load_corpus(p, CorpusFormat::Csv, "rel");
    REQUIRE(c.size() == 3);
    CHECK(c[0].title == "A, title");
    CHECK(c[0].abstract == "multi\nline");
    CHECK(c[1].abstract == "has \"quotes\"");
    CHECK(c[0].label == Label::Relevant);
    CHECK(c[1].label == Label::Irrelevant);
    CHECK_FALSE(c[2].label.has_value());

    const auto bad = dir.write("bad.csv", "id,title,abstract\n1,a,b\n2,c\n");
    CHECK_THROWS_WITH_AS(load_corpus(bad), doctest::Contains("line 3"), DataError);
}

TEST_CASE("jsonl round trip") {
    TempDir dir("corpus");
    const Corpus c("r", {{"x", "t \"q\"", "a\nb", Label::Relevant}, {"y", "u", "", std::nullopt}});
    save_corpus_jsonl(c, dir / "r.jsonl");
    const auto back = load_corpus(dir / "r.jsonl");
    REQUIRE(back.size() == 2);
    CHECK(back[0].title == c[0].title);
    CHECK(back[0].abstract == c[0].abstract);
    CHECK(back[0].label == c[0].label);
    CHECK_FALSE(back[1].label.has_value());
}

TEST_CASE("prevalence and groups") {
    const auto c1 = labeled(2544, 41);
    const auto p1 = prevalence(c1);
    CHECK(std::round(p1.fraction * 10000.0) / 100.0 == doctest::Approx(1.61));
    CHECK(p1.group == PrevalenceGroup::Low);

    const auto c15 = labeled(306, 40);
    const auto p15 = prevalence(c15);
    CHECK(std::round(p15.fraction * 10000.0) / 100.0 == doctest::Approx(13.07));
    CHECK(p15.group == PrevalenceGroup::Mid);

    CHECK(prevalence(labeled(2, 1)).group == PrevalenceGroup::High);

    Corpus partly("p", {{"a", "t", "", Label::Relevant}, {"b", "t", "", std::nullopt}});
    CHECK_THROWS_AS(prevalence(partly), DataError);
}

TEST_CASE("prevalence grouping matches every Cohen row") {
    // Reference groups: low rows have prevalence <= 5.92%, mid 8.98-13.07%, high >= 16.24%.
    const std::set<std::string> mid{"C6", "C8", "C15"};
    const std::set<std::string> high{"C4", "C7", "C10"};
    for (const auto& row : synth::cohen_rows()) {
        const auto g = prevalence_group(static_cast<double>(row.relevant) / static_cast<double>(row.n));
        const auto expected = mid.count(row.name)    ? PrevalenceGroup::Mid
                              : high.count(row.name) ? PrevalenceGroup::High
                                                     : PrevalenceGroup::Low;
        CHECK_MESSAGE(g == expected, row.name);
    }
}

TEST_CASE("prevalence grouping is total with contiguous boundaries") {
    CHECK(prevalence_group(0.0022) == PrevalenceGroup::Low);
    CHECK(prevalence_group(0.0592) == PrevalenceGroup::Low);
    CHECK(prevalence_group(0.0600) == PrevalenceGroup::Low);
    CHECK(prevalence_group(0.0679) == PrevalenceGroup::Mid);
    CHECK(prevalence_group(0.1307) == PrevalenceGroup::Mid);
    CHECK(prevalence_group(0.1340) == PrevalenceGroup::Mid);
    CHECK(prevalence_group(0.1345) == PrevalenceGroup::High);
    CHECK(prevalence_group(1.0) == PrevalenceGroup::High);
    CHECK_THROWS(prevalence_group(0.0));
    CHECK_THROWS(prevalence_group(1.5));
    for (int bp = 1; bp <= 10000; ++bp) {
        CHECK_NOTHROW(prevalence_group(bp / 10000.0));
    }
}

TEST_CASE("stratified folds: examples") {
    const auto c = labeled(10, 2);
    const auto plan = stratified_folds(c, 1, 2, 42);
    for (std::size_t f = 0; f < 2; ++f) {
        std::size_t rel = 0;
        for (auto i : plan.test(0, f)) {
            rel += is_relevant(*c[i].label) ? 1 : 0;
        }
        CHECK(rel == 1);
    }

    const auto big = labeled(60, 7);
    const auto plan500 = stratified_folds(big, 500, 2, 3);
    std::vector<std::size_t> test_count(big.size(), 0);
    std::size_t pairs = 0;
    for (std::size_t r = 0; r < 500; ++r) {
        for (std::size_t f = 0; f < 2; ++f) {
            ++pairs;
            for (auto i : plan500.test(r, f)) {
                ++test_count[i];
            }
        }
    }
    CHECK(pairs == 1000);
    CHECK(std::all_of(test_count.begin(), test_count.end(), [](auto n) { return n == 500; }));

    const auto again = stratified_folds(big, 500, 2, 3);
    for (std::size_t r = 0; r < 500; ++r) {
        for (std::size_t f = 0; f < 2; ++f) {
            REQUIRE(std::ranges::equal(again.test(r, f), plan500.test(r, f)));
        }
    }
}

TEST_CASE("stratified folds: partition and stratification properties") {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        Rng rng(seed);
        const std::size_t n = 5 + rng.uniform_index(60);
        const std::size_t rel = 1 + rng.uniform_index(n);
        const std::size_t k = 2 + rng.uniform_index(std::min<std::size_t>(n - 1, 5));
        const auto c = labeled(n, rel);
        const auto plan = stratified_folds(c, 3, k, seed);
        for (std::size_t r = 0; r < 3; ++r) {
            std::vector<int> seen(n, 0);
            for (std::size_t f = 0; f < k; ++f) {
                const auto test = plan.test(r, f);
                CHECK(std::is_sorted(test.begin(), test.end()));
                std::size_t fold_rel = 0;
                for (auto i : test) {
                    ++seen[i];
                    fold_rel += i < rel ? 1 : 0;
                }
                CHECK(fold_rel >= rel / k);
                CHECK(fold_rel <= (rel + k - 1) / k);
                const auto train = plan.train(r, f);
                CHECK(train.size() + test.size() == n);
            }
            CHECK(std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; }));
        }
    }
}

TEST_CASE("stratified folds: errors and warnings") {
    CHECK_THROWS_AS(stratified_folds(labeled(3, 1), 1, 4, 1), DataError);
    CHECK_THROWS_AS(stratified_folds(labeled(3, 0), 1, 2, 1), DataError);
    CHECK_THROWS_AS(stratified_folds(labeled(3, 1), 1, 1, 1), UsageError);
    std::vector<std::string> warnings;
    stratified_folds(labeled(10, 1), 1, 2, 1, &warnings);
    CHECK(warnings.size() == 1);
    Corpus partly("p", {{"a", "t", "", Label::Relevant}, {"b", "t", "", std::nullopt}});
    CHECK_THROWS_AS(stratified_folds(partly, 1, 2, 1), DataError);
}

TEST_CASE("csv helpers") {
    CHECK(csv::escape("plain") == "plain");
    CHECK(csv::escape("a,b") == "\"a,b\"");
    CHECK(csv::escape("q\"") == "\"q\"\"\"");
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 1e22, 0.0}) {
        CHECK(csv::parse_double(csv::format_double(v)) == v);
    }
    CHECK(csv::format_double(std::nan("")) == "NA");
    CHECK(std::isnan(csv::parse_double("NA")));
    CHECK_THROWS_AS(csv::parse_double("1.2x"), DataError);
}
TEST_SUITE_END();
