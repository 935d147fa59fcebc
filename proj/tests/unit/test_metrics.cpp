#include "screenkit/error.hpp"
#include "screenkit/metrics.hpp"
#include "screenkit/rng.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace screenkit;

TEST_SUITE_BEGIN("metrics");

namespace {

constexpr Label P = Label::Relevant;
constexpr Label N = Label::Irrelevant;

struct Instance {
    std::vector<double> scores;
    std::vector<Label> labels;
};

Instance random_instance(std::uint64_t seed, std::size_t n, bool ties) {
    Rng rng(seed);
    Instance inst;
    for (std::size_t i = 0; i < n; ++i) {
        const bool pos = rng.uniform01() < 0.3;
        double s = rng.normal() + (pos ? 0.7 : 0.0);
        if (ties) {
            s = std::round(s * 4.0) / 4.0;
        }
        inst.scores.push_back(s);
        inst.labels.push_back(pos ? P : N);
    }
    inst.labels[0] = P;
    inst.labels[1] = N;
    return inst;
}

} // namespace

TEST_CASE("metric names round trip") {
    for (auto m : kAllMetrics) {
        CHECK(parse_metric(to_string(m)) == m);
    }
    CHECK_THROWS_AS(parse_metric("nope"), UsageError);
    CHECK(lower_is_better(Metric::AmError));
    CHECK(lower_is_better(Metric::QdError));
    CHECK(lower_is_better(Metric::Burden));
    CHECK_FALSE(lower_is_better(Metric::Auc));
}

TEST_CASE("confusion examples") {
    const std::vector<double> s{1, -1};
    const std::vector<Label> y{P, N};
    CHECK(confusion(s, y, 0.0) == ContingencyTable{1, 0, 1, 0});

    const std::vector<double> zero{0.0};
    const std::vector<Label> yn{N};
    CHECK(confusion(zero, yn, 0.0).fp == 1);

    const std::vector<double> neg{-1, -2, -3};
    const std::vector<Label> pos{P, P, P};
    CHECK(confusion(neg, pos, 0.0).fn == 3);

    CHECK_THROWS_AS(confusion(neg, y, 0.0), UsageError);
}

TEST_CASE("classification metric examples") {
    auto m = classification_metrics({3, 1, 5, 1});
    CHECK(*m.precision == doctest::Approx(0.75));
    CHECK(*m.recall == doctest::Approx(0.75));
    CHECK(*m.f_measure == doctest::Approx(0.75));
    CHECK(*m.accuracy == doctest::Approx(0.8));

    // fn-rate 0.2 (tp 8, fn 2), fp-rate 0.4 (fp 4, tn 6).
    m = classification_metrics({8, 4, 6, 2});
    CHECK(*m.am_error == doctest::Approx(0.3));
    CHECK(*m.qd_error == doctest::Approx(0.3162).epsilon(1e-4));

    m = classification_metrics({0, 0, 5, 3});
    CHECK_FALSE(m.precision.has_value());
    CHECK(*m.recall == 0.0);
    CHECK_FALSE(m.f_measure.has_value());

    m = classification_metrics({0, 2, 3, 0});
    CHECK_FALSE(m.recall.has_value());
    CHECK_FALSE(m.am_error.has_value());
    CHECK_FALSE(m.qd_error.has_value());
}

TEST_CASE("classification metrics match a scalar recomputation on 1000 random tables") {
    Rng rng(7);
    for (int trial = 0; trial < 1000; ++trial) {
        const ContingencyTable t{rng.uniform_index(6), rng.uniform_index(6), rng.uniform_index(6),
                                 rng.uniform_index(6)};
        if (t.total() == 0) {
            continue;
        }
        const double tp = static_cast<double>(t.tp), fp = static_cast<double>(t.fp);
        const double tn = static_cast<double>(t.tn), fn = static_cast<double>(t.fn);
        const auto m = classification_metrics(t);
        if (tp + fp > 0) {
            REQUIRE(m.precision == tp / (tp + fp));
        } else {
            REQUIRE_FALSE(m.precision);
        }
        if (tp + fn > 0) {
            REQUIRE(m.recall == tp / (tp + fn));
        } else {
            REQUIRE_FALSE(m.recall);
        }
        if (tp + fp > 0 && tp + fn > 0 && tp > 0) {
            const double p = tp / (tp + fp), r = tp / (tp + fn);
            REQUIRE(*m.f_measure == doctest::Approx(2 * p * r / (p + r)).epsilon(1e-15));
        } else {
            REQUIRE_FALSE(m.f_measure);
        }
        REQUIRE(m.accuracy == (tp + tn) / (tp + fp + tn + fn));
        if (tp + fn > 0 && fp + tn > 0) {
            const double lp = fn / (tp + fn), ln = fp / (fp + tn);
            REQUIRE(*m.am_error == doctest::Approx((lp + ln) / 2).epsilon(1e-15));
            REQUIRE(*m.qd_error == doctest::Approx(std::sqrt((lp * lp + ln * ln) / 2)).epsilon(1e-15));
        } else {
            REQUIRE_FALSE(m.am_error);
            REQUIRE_FALSE(m.qd_error);
        }
    }
}

TEST_CASE("ranking_auc examples and pair-count oracle") {
    const std::vector<double> s{3, 2, 1, 0};
    const std::vector<Label> y{P, P, N, N};
    CHECK(*ranking_auc(s, y) == 1.0);
    const std::vector<double> flat{1, 1, 1, 1};
    CHECK(*ranking_auc(flat, y) == 0.5);
    const std::vector<Label> one_class{P, P, P, P};
    CHECK_FALSE(ranking_auc(s, one_class));

    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto inst = random_instance(seed, 200, seed % 2 == 0);
        REQUIRE(std::fabs(*ranking_auc(inst.scores, inst.labels) - oracle::pair_count_auc(inst.scores, inst.labels)) < 1e-9);
    }
}

TEST_CASE("ranking_auc properties") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto inst = random_instance(seed, 150, false);
        const double a = *ranking_auc(inst.scores, inst.labels);
        std::vector<double> neg, mono;
        for (double v : inst.scores) {
            neg.push_back(-v);
            mono.push_back(std::exp(v) * 3.0 - 1.0);
        }
        CHECK(a + *ranking_auc(neg, inst.labels) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(*ranking_auc(mono, inst.labels) == a);
    }
}

TEST_CASE("ranking_auprc examples and sweep oracle") {
    std::vector<double> s{5, 4, 3, 2, 1};
    std::vector<Label> first{P, N, N, N, N};
    CHECK(*ranking_auprc(s, first) == 1.0);
    std::vector<Label> last{N, N, N, N, P};
    CHECK(*ranking_auprc(s, last) == doctest::Approx(0.2));
    std::vector<Label> perfect{P, P, N, N, N};
    CHECK(*ranking_auprc(s, perfect) == 1.0);
    std::vector<Label> none{N, N, N, N, N};
    CHECK_FALSE(ranking_auprc(s, none));

    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto inst = random_instance(seed + 1000, 200, seed % 2 == 1);
        REQUIRE(std::fabs(*ranking_auprc(inst.scores, inst.labels) - oracle::sweep_auprc(inst.scores, inst.labels)) < 1e-6);
    }
}

TEST_CASE("screening metrics") {
    CHECK(utility(0.98, 0.5) == doctest::Approx(0.956));
    CHECK(utility(1.0, 1.0) == doctest::Approx(0.95));

    // Nothing predicted positive: only the training split is screened.
    const std::vector<double> s{-1, -1, -1, -1};
    const std::vector<Label> y{P, N, N, N};
    EvalInput in{s, y, 0.0, 1, 5};
    const auto m = screening_metrics(in);
    CHECK(*m.burden == doctest::Approx(6.0 / 10.0));
    CHECK(*m.yield == doctest::Approx(1.0 / 2.0));
    CHECK(*m.utility == doctest::Approx((19.0 * 0.5 + 0.4) / 20.0));

    const std::vector<Label> all_neg{N, N, N, N};
    EvalInput none{s, all_neg, 0.0, 0, 6};
    CHECK_FALSE(screening_metrics(none).yield);

    for (int yi = 0; yi <= 10; ++yi) {
        for (int bi = 0; bi <= 10; ++bi) {
            const double u = utility(yi / 10.0, bi / 10.0);
            CHECK(u >= 0.0);
            CHECK(u <= 1.0);
        }
    }
}

TEST_CASE("evaluate fills every metric for a two-class split") {
    const std::vector<double> s{2, 1, -1, -2, 0.5};
    const std::vector<Label> y{P, N, P, N, N};
    const auto r = evaluate({s, y, 0.0, 3, 7});
    for (auto m : kAllMetrics) {
        REQUIRE(r[m].has_value());
        CHECK(*r[m] >= 0.0);
        CHECK(*r[m] <= 1.0);
    }
    CHECK(*r[Metric::Precision] == doctest::Approx(1.0 / 3.0));
    CHECK(*r[Metric::Recall] == doctest::Approx(0.5));
    CHECK(*r[Metric::Burden] == doctest::Approx((3.0 + 7.0 + 1.0 + 2.0) / 15.0));
}
TEST_SUITE_END();
