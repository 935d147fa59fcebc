#pragma once

#include "screenkit/corpus.hpp"
#include "screenkit/feature_matrix.hpp"
#include "screenkit/features.hpp"

#include <memory>
#include <mutex>
#include <optional>
#include <string_view>

namespace screenkit {

enum class FeatureKind { UniBi, W2vRow, W2vCol };

std::string_view to_string(FeatureKind k);
FeatureKind parse_feature_kind(std::string_view s);

/// Lazily built feature matrices over a whole corpus, labeled and unlabeled
/// text alike. Cross-validation slices rows out of these matrices. The
/// vocabulary and embedding table are built at most once; all accessors are
/// safe to call from several threads.
class FeatureContext {
public:
    /// Embeddings are trained on the corpus text with `skipgram` on first use.
    FeatureContext(Corpus corpus, SkipGramOptions skipgram);
    /// Uses a pre-trained embedding table.
    FeatureContext(Corpus corpus, EmbeddingTable table);

    const Corpus& corpus() const { return corpus_; }
    const FeatureMatrix& matrix(FeatureKind kind) const;
    const Vocabulary& vocabulary() const;
    const EmbeddingTable& embeddings() const;
    /// Citations with no token in the embedding table.
    std::size_t uncovered() const;

private:
    struct Lazy {
        std::once_flag once;
        FeatureMatrix value;
    };

    const EmbeddedCorpus& embedded() const;

    Corpus corpus_;
    SkipGramOptions skipgram_;
    mutable std::once_flag vocab_once_;
    mutable Vocabulary vocab_;
    mutable std::once_flag table_once_;
    mutable std::optional<EmbeddingTable> table_;
    mutable std::once_flag embedded_once_;
    mutable EmbeddedCorpus embedded_;
    mutable std::unique_ptr<Lazy[]> matrices_;
};

} // namespace screenkit
