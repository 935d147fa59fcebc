#include "screenkit/relrank.hpp"

#include "screenkit/csv.hpp"
#include "screenkit/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <numeric>

namespace screenkit {

std::vector<EnsembleMember> EnsembleConfig::default_members() {
    TrainConfig auc;
    auc.loss = Loss::Auc;
    TrainConfig cost;
    cost.loss = Loss::CostHinge;
    cost.use_intercept = true;
    return {{auc, FeatureKind::W2vRow}, {cost, FeatureKind::W2vRow}, {cost, FeatureKind::UniBi}};
}

double EnsembleConfig::threshold(std::size_t member) const {
    return member_thresholds.empty() ? 0.0 : member_thresholds.at(member);
}

void EnsembleConfig::validate() const {
    if (members.empty()) {
        throw UsageError("ensemble needs at least one member");
    }
    if (!(separation_threshold > max_range) || !(max_range > 0.0)) {
        throw UsageError("ensemble needs ST > MR > 0");
    }
    if (!(star_cutoffs[0] < star_cutoffs[1] && star_cutoffs[1] < star_cutoffs[2])) {
        throw UsageError("star cutoffs must be strictly increasing");
    }
    if (!member_thresholds.empty() && member_thresholds.size() != members.size()) {
        throw UsageError("member_thresholds must have one entry per member");
    }
}

std::vector<std::size_t> rank_by_score(std::span<const double> scores) {
    for (double s : scores) {
        if (!std::isfinite(s)) {
            throw DataError("non-finite score cannot be ranked");
        }
    }
    const std::size_t u = scores.size();
    std::vector<std::size_t> order(u);
    std::iota(order.begin(), order.end(), 0);
    // Ascending by score; among ties later indices first so earlier ones rank higher.
    std::sort(order.begin(), order.end(), [&](auto a, auto b) {
        return scores[a] != scores[b] ? scores[a] < scores[b] : a > b;
    });
    std::vector<std::size_t> ranks(u);
    for (std::size_t pos = 0; pos < u; ++pos) {
        ranks[order[pos]] = pos + 1;
    }
    return ranks;
}

double fvote(std::size_t rank, std::size_t u) {
    const double U = static_cast<double>(u);
    return std::exp(-(U - static_cast<double>(rank)) / U);
}

double norm_rank(double mean_rank, std::size_t u, double max_range) {
    if (u <= 1) {
        return max_range;
    }
    return (mean_rank - 1.0) / (static_cast<double>(u) - 1.0) * max_range;
}

std::vector<CombinedScore> generate_combined_score(const std::vector<std::vector<double>>& member_scores,
                                                   std::span<const double> thresholds,
                                                   double separation_threshold, double max_range,
                                                   std::span<const std::string> ids) {
    if (member_scores.empty()) {
        throw UsageError("generate_combined_score needs at least one member");
    }
    const std::size_t u = member_scores.front().size();
    for (const auto& s : member_scores) {
        if (s.size() != u) {
            throw UsageError("member score lists differ in length");
        }
    }
    if (u == 0) {
        throw UsageError("generate_combined_score needs at least one citation");
    }
    if (!ids.empty() && ids.size() != u) {
        throw UsageError("ids and member scores differ in length");
    }
    if (!thresholds.empty() && thresholds.size() != member_scores.size()) {
        throw UsageError("one threshold per member required");
    }
    const std::size_t m = member_scores.size();
    std::vector<std::vector<std::size_t>> ranks;
    ranks.reserve(m);
    for (const auto& s : member_scores) {
        ranks.push_back(rank_by_score(s));
    }
    auto thr = [&](std::size_t h) { return thresholds.empty() ? 0.0 : thresholds[h]; };

    std::vector<CombinedScore> out(u);
    for (std::size_t i = 0; i < u; ++i) {
        CombinedScore& c = out[i];
        if (!ids.empty()) {
            c.id = ids[i];
        }
        c.nv = member_scores[0][i] >= thr(0) ? 1 : -1;
        double rank_sum = 0.0;
        for (std::size_t h = 0; h < m; ++h) {
            if (h > 0) {
                const bool positive = member_scores[h][i] >= thr(h);
                if (c.nv > 0 && positive) {
                    ++c.nv;
                } else if (c.nv < 0 && !positive) {
                    --c.nv;
                }
            }
            c.fv += fvote(ranks[h][i], u);
            rank_sum += static_cast<double>(ranks[h][i]);
        }
        c.rs = rank_sum / static_cast<double>(m);
        c.ns = norm_rank(c.rs, u, max_range);
        const double finv = c.nv >= 1 ? c.fv : static_cast<double>(c.nv);
        c.score = finv * separation_threshold + c.ns;
    }
    return out;
}

int assign_stars(double score, const EnsembleConfig& config) {
    const auto& cut = config.star_cutoffs;
    if (score >= cut[2]) {
        return 5;
    }
    if (score >= cut[1]) {
        return 4;
    }
    if (score >= cut[0]) {
        return 3;
    }
    return score > -2.0 * config.separation_threshold + config.max_range ? 2 : 1;
}

std::vector<int> assign_stars(std::span<const CombinedScore> scores, const EnsembleConfig& config) {
    std::vector<int> stars(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        stars[i] = assign_stars(scores[i].score, config);
    }
    return stars;
}

std::vector<CombinedScore> relrank_rows(const FeatureContext& context, std::span<const std::size_t> train_rows,
                                        std::span<const Label> train_labels,
                                        std::span<const std::size_t> test_rows, const EnsembleConfig& config) {
    config.validate();
    if (test_rows.empty()) {
        throw DataError("nothing to rate: no unlabeled citations");
    }
    const std::size_t m = config.members.size();
    std::vector<std::future<std::vector<double>>> jobs;
    jobs.reserve(m);
    for (std::size_t h = 0; h < m; ++h) {
        // Matrices are built before launching so lazy construction stays on this thread.
        const FeatureMatrix& all = context.matrix(config.members[h].feature);
        jobs.push_back(std::async(std::launch::async, [&, h] {
            const auto train_x = all.select_rows(train_rows);
            const auto test_x = all.select_rows(test_rows);
            const auto outcome = train(train_x, train_labels, config.members[h].config, &test_x);
            return score_citations(outcome.model, test_x);
        }));
    }
    std::vector<std::vector<double>> scores;
    scores.reserve(m);
    for (auto& j : jobs) {
        scores.push_back(j.get());
    }
    std::vector<std::string> ids;
    ids.reserve(test_rows.size());
    for (auto r : test_rows) {
        ids.push_back(context.corpus()[r].id);
    }
    std::vector<double> thresholds(m);
    for (std::size_t h = 0; h < m; ++h) {
        thresholds[h] = config.threshold(h);
    }
    return generate_combined_score(scores, thresholds, config.separation_threshold, config.max_range, ids);
}

std::vector<CombinedScore> relrank(const FeatureContext& context, const EnsembleConfig& config) {
    const Corpus& corpus = context.corpus();
    std::vector<std::size_t> train_rows, test_rows;
    std::vector<Label> labels;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        if (corpus[i].label) {
            train_rows.push_back(i);
            labels.push_back(*corpus[i].label);
        } else {
            test_rows.push_back(i);
        }
    }
    auto out = relrank_rows(context, train_rows, labels, test_rows, config);
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.score > b.score; });
    return out;
}

std::vector<CombinedScore> relrank(const Corpus& labeled, const Corpus& unlabeled, const EnsembleConfig& config,
                                   const SkipGramOptions& skipgram) {
    std::vector<Citation> all;
    all.reserve(labeled.size() + unlabeled.size());
    for (const auto& c : labeled.citations()) {
        if (!c.label) {
            throw DataError("citation '" + c.id + "' in the labeled set has no label");
        }
        all.push_back(c);
    }
    for (const auto& c : unlabeled.citations()) {
        all.push_back(c);
        all.back().label.reset();
    }
    FeatureContext context(Corpus(labeled.name(), std::move(all)), skipgram);
    return relrank(context, config);
}

void write_ratings_csv(const std::filesystem::path& path, std::span<const CombinedScore> scores,
                       const EnsembleConfig& config) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    csv::write_record(out, {"id", "score", "nv", "fv", "rs", "ns", "stars"});
    for (const auto& c : scores) {
        csv::write_record(out, {c.id, csv::format_double(c.score), std::to_string(c.nv), csv::format_double(c.fv),
                                csv::format_double(c.rs), csv::format_double(c.ns),
                                std::to_string(assign_stars(c.score, config))});
    }
}

} // namespace screenkit
