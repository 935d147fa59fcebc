#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace screenkit {

enum class Label : std::int8_t { Irrelevant = -1, Relevant = 1 };

inline int sign(Label l) { return static_cast<int>(l); }
inline bool is_relevant(Label l) { return l == Label::Relevant; }

struct Citation {
    std::string id;
    std::string title;
    std::string abstract;
    std::optional<Label> label;
};

/// An ordered, duplicate-free collection of citations.
class Corpus {
public:
    Corpus() = default;
    /// Throws DataError on empty or duplicate ids, or on empty text.
    Corpus(std::string name, std::vector<Citation> citations);

    const std::string& name() const { return name_; }
    std::span<const Citation> citations() const { return citations_; }
    const Citation& operator[](std::size_t i) const { return citations_[i]; }
    std::size_t size() const { return citations_.size(); }
    bool empty() const { return citations_.empty(); }

    std::optional<std::size_t> find(std::string_view id) const;

    std::size_t labeled_count() const;
    std::size_t unlabeled_count() const { return size() - labeled_count(); }
    std::size_t relevant_count() const;
    bool fully_labeled() const { return labeled_count() == size(); }

    /// Labels in corpus order; throws DataError if any citation is unlabeled.
    std::vector<Label> labels() const;

    /// Sub-corpus of the given positions, in the given order.
    Corpus subset(std::span<const std::size_t> positions, std::string name) const;

    /// Partition into the labeled and unlabeled citations (order preserved).
    std::pair<Corpus, Corpus> split_labeled() const;

private:
    std::string name_;
    std::vector<Citation> citations_;
    std::unordered_map<std::string, std::size_t> index_;
};

enum class CorpusFormat { Jsonl, Csv };

/// Reads a corpus file. `label_field` names the JSONL/CSV field holding the
/// relevance label (1, -1, or null/empty).
Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format,
                   std::string_view label_field = "label");

/// Picks the format from the file extension (.csv -> Csv, otherwise Jsonl).
Corpus load_corpus(const std::filesystem::path& path);

void save_corpus_jsonl(const Corpus& corpus, const std::filesystem::path& path);

enum class PrevalenceGroup { Low, Mid, High };

std::string_view to_string(PrevalenceGroup g);
PrevalenceGroup parse_prevalence_group(std::string_view s);

/// Group of a prevalence fraction in (0, 1]. The percentage is rounded to
/// two decimals before the boundary test, matching how review prevalences
/// are tabulated: Low < 6.79% <= Mid < 13.45% <= High.
PrevalenceGroup prevalence_group(double fraction);

struct Prevalence {
    double fraction;
    PrevalenceGroup group;
};

Prevalence prevalence(const Corpus& corpus);

/// Repeated stratified k-fold assignment.
class FoldPlan {
public:
    FoldPlan(std::size_t repetitions, std::size_t k, std::uint64_t seed,
             std::vector<std::vector<std::vector<std::size_t>>> test_sets);

    std::size_t repetitions() const { return repetitions_; }
    std::size_t k() const { return k_; }
    std::uint64_t seed() const { return seed_; }

    /// Corpus positions held out in (repetition, fold), ascending.
    std::span<const std::size_t> test(std::size_t repetition, std::size_t fold) const {
        return test_sets_[repetition][fold];
    }
    /// Complement of test(repetition, fold), ascending.
    std::vector<std::size_t> train(std::size_t repetition, std::size_t fold) const;

    std::size_t corpus_size() const { return corpus_size_; }

private:
    std::size_t repetitions_;
    std::size_t k_;
    std::uint64_t seed_;
    std::size_t corpus_size_ = 0;
    std::vector<std::vector<std::vector<std::size_t>>> test_sets_;
};

/// Stratified folds: relevant and irrelevant citations are shuffled
/// separately and dealt round-robin, so per-fold relevant counts differ by at
/// most one. Emits a warning to `warnings` (if given) when #relevant < k.
FoldPlan stratified_folds(const Corpus& corpus, std::size_t repetitions, std::size_t k,
                          std::uint64_t seed, std::vector<std::string>* warnings = nullptr);

FoldPlan stratified_folds(std::span<const Label> labels, std::size_t repetitions, std::size_t k,
                          std::uint64_t seed, std::vector<std::string>* warnings = nullptr);

} // namespace screenkit
