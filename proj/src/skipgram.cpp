#include "screenkit/error.hpp"
#include "screenkit/features.hpp"
#include "screenkit/rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace screenkit {

namespace {

float sigmoid(float x) {
    if (x > 30.0f) {
        return 1.0f;
    }
    if (x < -30.0f) {
        return 0.0f;
    }
    return 1.0f / (1.0f + std::exp(-x));
}

} // namespace

EmbeddingTable train_skipgram(std::span<const Corpus> corpora, const SkipGramOptions& opt) {
    if (opt.dim < 2) {
        throw UsageError("embedding dimension must be at least 2");
    }
    if (opt.window < 1 || opt.epochs < 1) {
        throw UsageError("window and epochs must be positive");
    }

    // Tokenized citations, title then abstract.
    std::vector<std::vector<std::string>> docs;
    std::map<std::string, std::uint64_t> counts;
    std::uint64_t total_tokens = 0;
    for (const auto& corpus : corpora) {
        for (const auto& c : corpus.citations()) {
            auto toks = tokenize(c.title);
            auto more = tokenize(c.abstract);
            toks.insert(toks.end(), std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()));
            for (const auto& t : toks) {
                ++counts[t];
            }
            total_tokens += toks.size();
            docs.push_back(std::move(toks));
        }
    }
    if (total_tokens < opt.min_count) {
        throw DataError("corpus has " + std::to_string(total_tokens) + " tokens, fewer than min_count=" +
                        std::to_string(opt.min_count));
    }

    // Frequent words first; ties alphabetical.
    std::vector<std::pair<std::string, std::uint64_t>> kept;
    for (const auto& [w, n] : counts) {
        if (n >= opt.min_count) {
            kept.emplace_back(w, n);
        }
    }
    if (kept.empty()) {
        throw DataError("no word reaches min_count=" + std::to_string(opt.min_count));
    }
    std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });

    const std::size_t vocab = kept.size();
    const std::size_t dim = opt.dim;
    std::map<std::string, std::uint32_t> ids;
    for (std::size_t i = 0; i < vocab; ++i) {
        ids.emplace(kept[i].first, static_cast<std::uint32_t>(i));
    }
    std::vector<std::vector<std::uint32_t>> sentences;
    sentences.reserve(docs.size());
    std::uint64_t train_words = 0;
    for (const auto& d : docs) {
        std::vector<std::uint32_t> s;
        for (const auto& t : d) {
            auto it = ids.find(t);
            if (it != ids.end()) {
                s.push_back(it->second);
            }
        }
        train_words += s.size();
        sentences.push_back(std::move(s));
    }

    // Negative-sampling distribution: unigram counts to the 3/4 power.
    std::vector<double> cumulative(vocab);
    double acc = 0.0;
    for (std::size_t i = 0; i < vocab; ++i) {
        acc += std::pow(static_cast<double>(kept[i].second), 0.75);
        cumulative[i] = acc;
    }

    Rng rng(opt.seed);
    std::vector<float> in(vocab * dim), out(vocab * dim, 0.0f);
    for (auto& v : in) {
        v = static_cast<float>((rng.uniform01() - 0.5) / static_cast<double>(dim));
    }

    auto draw_negative = [&]() -> std::uint32_t {
        const double u = rng.uniform01() * acc;
        auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
        return static_cast<std::uint32_t>(std::min<std::size_t>(it - cumulative.begin(), vocab - 1));
    };

    std::vector<float> grad(dim);
    const double total_work = static_cast<double>(opt.epochs) * static_cast<double>(train_words) + 1.0;
    std::uint64_t processed = 0;
    for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
        for (const auto& s : sentences) {
            for (std::size_t pos = 0; pos < s.size(); ++pos, ++processed) {
                const double progress = static_cast<double>(processed) / total_work;
                const auto lr = static_cast<float>(opt.learning_rate * std::max(1.0 - progress, 1e-4));
                const std::size_t shrink = rng.uniform_index(opt.window);
                const std::size_t span = opt.window - shrink;
                const std::size_t lo = pos >= span ? pos - span : 0;
                const std::size_t hi = std::min(s.size() - 1, pos + span);
                const std::uint32_t center = s[pos];
                for (std::size_t c = lo; c <= hi; ++c) {
                    if (c == pos) {
                        continue;
                    }
                    float* l1 = &in[static_cast<std::size_t>(s[c]) * dim];
                    std::fill(grad.begin(), grad.end(), 0.0f);
                    for (std::size_t d = 0; d <= opt.negatives; ++d) {
                        std::uint32_t target;
                        float label;
                        if (d == 0) {
                            target = center;
                            label = 1.0f;
                        } else {
                            target = draw_negative();
                            if (target == center) {
                                continue;
                            }
                            label = 0.0f;
                        }
                        float* l2 = &out[static_cast<std::size_t>(target) * dim];
                        float f = 0.0f;
                        for (std::size_t k = 0; k < dim; ++k) {
                            f += l1[k] * l2[k];
                        }
                        const float g = (label - sigmoid(f)) * lr;
                        for (std::size_t k = 0; k < dim; ++k) {
                            grad[k] += g * l2[k];
                        }
                        for (std::size_t k = 0; k < dim; ++k) {
                            l2[k] += g * l1[k];
                        }
                    }
                    for (std::size_t k = 0; k < dim; ++k) {
                        l1[k] += grad[k];
                    }
                }
            }
        }
    }

    std::vector<std::string> words;
    words.reserve(vocab);
    for (auto& [w, n] : kept) {
        words.push_back(w);
    }
    return EmbeddingTable(std::move(words), std::move(in), dim, opt.window, opt.min_count);
}

} // namespace screenkit
