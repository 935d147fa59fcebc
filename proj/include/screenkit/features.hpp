#pragma once

#include "screenkit/corpus.hpp"
#include "screenkit/feature_matrix.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace screenkit {

/// Lowercased alphanumeric tokens in text order. Bytes >= 0x80 are kept as
/// word characters so UTF-8 words are not split; everything else separates.
std::vector<std::string> tokenize(std::string_view text);

/// Unigram and bigram terms of a citation. Title and abstract are tokenized
/// separately and bigrams never span the two.
std::vector<std::string> unibigram_terms(const Citation& c);

/// Unigram and adjacent-pair bigram terms of one token sequence. Bigram terms
/// are the two words joined by a single space.
std::vector<std::string> unibigram_terms(std::span<const std::string> tokens);

class Vocabulary {
public:
    /// Index of `term`, or -1 when absent.
    std::int64_t find(std::string_view term) const;
    std::size_t size() const { return terms_.size(); }
    const std::string& term(std::size_t i) const { return terms_[i]; }
    std::uint32_t document_frequency(std::size_t i) const { return df_[i]; }
    std::size_t unigram_count() const;
    std::size_t bigram_count() const { return size() - unigram_count(); }

    /// Adds a term (if new) and returns its index.
    std::size_t add(const std::string& term);
    void bump_document_frequency(std::size_t i) { ++df_[i]; }

    void save_tsv(const std::filesystem::path& path) const;
    static Vocabulary load_tsv(const std::filesystem::path& path);

private:
    std::vector<std::string> terms_;
    std::vector<std::uint32_t> df_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Terms get indices in order of first occurrence over the corpus.
Vocabulary build_unibigram_vocab(const Corpus& corpus);

/// Term counts of one citation; out-of-vocabulary terms are ignored.
SparseVector vectorize_unibigram(const Citation& c, const Vocabulary& vocab);

FeatureMatrix unibigram_matrix(const Corpus& corpus, const Vocabulary& vocab);

/// Word vectors learned by skip-gram with negative sampling.
class EmbeddingTable {
public:
    EmbeddingTable() = default;
    EmbeddingTable(std::vector<std::string> words, std::vector<float> vectors, std::size_t dim,
                   std::size_t window = 5, std::size_t min_count = 15);

    std::size_t dim() const { return dim_; }
    std::size_t window() const { return window_; }
    std::size_t min_count() const { return min_count_; }
    std::size_t size() const { return words_.size(); }
    bool empty() const { return words_.empty(); }

    std::int64_t find(std::string_view word) const;
    const std::string& word(std::size_t i) const { return words_[i]; }
    std::span<const float> vector(std::size_t i) const { return {vectors_.data() + i * dim_, dim_}; }
    /// Throws DataError naming the word when it is not in the table.
    std::span<const float> vector(std::string_view word) const;

    void save_tsv(const std::filesystem::path& path) const;
    static EmbeddingTable load_tsv(const std::filesystem::path& path);

    bool operator==(const EmbeddingTable&) const = default;

private:
    std::vector<std::string> words_;
    std::vector<float> vectors_;
    std::size_t dim_ = 0;
    std::size_t window_ = 5;
    std::size_t min_count_ = 15;
    std::unordered_map<std::string, std::size_t> index_;
};

struct SkipGramOptions {
    std::size_t dim = 100;
    std::size_t window = 5;
    std::size_t min_count = 15;
    std::size_t epochs = 5;
    std::size_t negatives = 5;
    double learning_rate = 0.025;
    std::uint64_t seed = 1;
};

/// Single-threaded skip-gram training over the title+abstract tokens of every
/// citation; identical options give identical tables.
EmbeddingTable train_skipgram(std::span<const Corpus> corpora, const SkipGramOptions& options);

struct CitationEmbedding {
    std::vector<double> vector;
    std::size_t tokens_in_table = 0;
    /// False when no token was found in the table; the vector is then zero.
    bool covered = false;
};

CitationEmbedding embed_citation(const Citation& c, const EmbeddingTable& table);

enum class Normalization { Raw, Row, Col };

struct DenseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;
    Normalization normalization = Normalization::Raw;

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

    FeatureMatrix to_features() const { return FeatureMatrix::from_dense(data, rows, cols); }
};

struct EmbeddedCorpus {
    DenseMatrix matrix;
    std::size_t uncovered = 0;
};

/// Mean word vectors of every citation (raw, unrounded).
EmbeddedCorpus embed_corpus(const Corpus& corpus, const EmbeddingTable& table);

/// Rounds to two decimals, half away from zero.
double round2(double v);

/// z-normalizes each row (Row) or column (Col) with the population standard
/// deviation, then rounds every entry to two decimals. Zero-variance rows or
/// columns become 0.
DenseMatrix normalize(const DenseMatrix& m, Normalization mode);

/// Raw matrix rounded to two decimals.
DenseMatrix finalize(const DenseMatrix& m);

double cosine_similarity(const EmbeddingTable& table, std::string_view a, std::string_view b);

struct Neighbor {
    std::string word;
    double similarity;
};

/// k most similar words to `word`, excluding itself.
std::vector<Neighbor> nearest_neighbors(const EmbeddingTable& table, std::string_view word, std::size_t k);

/// "a is to b as c is to ?": the k words nearest to b - a + c (unit-length
/// word vectors), excluding a, b and c.
std::vector<Neighbor> analogy(const EmbeddingTable& table, std::string_view a, std::string_view b,
                              std::string_view c, std::size_t k);

} // namespace screenkit
