#include "screenkit/featurize.hpp"

#include "screenkit/error.hpp"

#include <string>

namespace screenkit {

std::string_view to_string(FeatureKind k) {
    switch (k) {
    case FeatureKind::UniBi:
        return "unibi";
    case FeatureKind::W2vRow:
        return "w2v-row";
    case FeatureKind::W2vCol:
        return "w2v-col";
    }
    return "?";
}

FeatureKind parse_feature_kind(std::string_view s) {
    for (auto k : {FeatureKind::UniBi, FeatureKind::W2vRow, FeatureKind::W2vCol}) {
        if (to_string(k) == s) {
            return k;
        }
    }
    throw UsageError("unknown feature kind '" + std::string(s) + "' (expected unibi, w2v-row or w2v-col)");
}

FeatureContext::FeatureContext(Corpus corpus, SkipGramOptions skipgram)
    : corpus_(std::move(corpus)), skipgram_(skipgram), matrices_(std::make_unique<Lazy[]>(3)) {
    if (corpus_.empty()) {
        throw DataError("cannot featurize an empty corpus");
    }
}

FeatureContext::FeatureContext(Corpus corpus, EmbeddingTable table)
    : FeatureContext(std::move(corpus), SkipGramOptions{}) {
    if (table.empty()) {
        throw DataError("embedding table is empty");
    }
    std::call_once(table_once_, [&] { table_ = std::move(table); });
}

const Vocabulary& FeatureContext::vocabulary() const {
    std::call_once(vocab_once_, [&] { vocab_ = build_unibigram_vocab(corpus_); });
    return vocab_;
}

const EmbeddingTable& FeatureContext::embeddings() const {
    std::call_once(table_once_, [&] {
        const Corpus* one = &corpus_;
        table_ = train_skipgram(std::span<const Corpus>(one, 1), skipgram_);
    });
    return *table_;
}

const EmbeddedCorpus& FeatureContext::embedded() const {
    std::call_once(embedded_once_, [&] { embedded_ = embed_corpus(corpus_, embeddings()); });
    return embedded_;
}

std::size_t FeatureContext::uncovered() const {
    return embedded().uncovered;
}

const FeatureMatrix& FeatureContext::matrix(FeatureKind kind) const {
    Lazy& slot = matrices_[static_cast<std::size_t>(kind)];
    std::call_once(slot.once, [&] {
        switch (kind) {
        case FeatureKind::UniBi:
            slot.value = unibigram_matrix(corpus_, vocabulary());
            break;
        case FeatureKind::W2vRow:
            slot.value = normalize(embedded().matrix, Normalization::Row).to_features();
            break;
        case FeatureKind::W2vCol:
            slot.value = normalize(embedded().matrix, Normalization::Col).to_features();
            break;
        }
    });
    return slot.value;
}

} // namespace screenkit
