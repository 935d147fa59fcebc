#include "screenkit/features.hpp"

#include "screenkit/csv.hpp"
#include "screenkit/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace screenkit {

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isalnum(c) || c >= 0x80) {
            cur.push_back(static_cast<char>(c < 0x80 ? std::tolower(c) : c));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) {
        out.push_back(std::move(cur));
    }
    return out;
}

std::vector<std::string> unibigram_terms(std::span<const std::string> tokens) {
    std::vector<std::string> terms(tokens.begin(), tokens.end());
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
        terms.push_back(tokens[i] + " " + tokens[i + 1]);
    }
    return terms;
}

std::vector<std::string> unibigram_terms(const Citation& c) {
    auto terms = unibigram_terms(tokenize(c.title));
    auto more = unibigram_terms(tokenize(c.abstract));
    terms.insert(terms.end(), std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()));
    return terms;
}

std::int64_t Vocabulary::find(std::string_view term) const {
    auto it = index_.find(std::string(term));
    return it == index_.end() ? -1 : static_cast<std::int64_t>(it->second);
}

std::size_t Vocabulary::unigram_count() const {
    return static_cast<std::size_t>(std::count_if(terms_.begin(), terms_.end(), [](const std::string& t) {
        return t.find(' ') == std::string::npos;
    }));
}

std::size_t Vocabulary::add(const std::string& term) {
    auto [it, inserted] = index_.emplace(term, terms_.size());
    if (inserted) {
        terms_.push_back(term);
        df_.push_back(0);
    }
    return it->second;
}

void Vocabulary::save_tsv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    out << "term\tindex\tdf\n";
    for (std::size_t i = 0; i < terms_.size(); ++i) {
        out << terms_[i] << '\t' << i << '\t' << df_[i] << '\n';
    }
}

Vocabulary Vocabulary::load_tsv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open " + path.string());
    }
    Vocabulary v;
    std::string line;
    std::getline(in, line);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        const auto t1 = line.find('\t');
        const auto t2 = line.find('\t', t1 + 1);
        if (t1 == std::string::npos || t2 == std::string::npos) {
            throw DataError("malformed vocabulary line " + std::to_string(line_no));
        }
        const auto idx = v.add(line.substr(0, t1));
        if (idx != std::stoull(line.substr(t1 + 1, t2 - t1 - 1))) {
            throw DataError("vocabulary indices must be contiguous (line " + std::to_string(line_no) + ")");
        }
        v.df_[idx] = static_cast<std::uint32_t>(std::stoul(line.substr(t2 + 1)));
    }
    return v;
}

Vocabulary build_unibigram_vocab(const Corpus& corpus) {
    if (corpus.empty()) {
        throw DataError("cannot build a vocabulary from an empty corpus");
    }
    Vocabulary vocab;
    std::vector<std::size_t> seen;
    for (const auto& c : corpus.citations()) {
        seen.clear();
        for (const auto& t : unibigram_terms(c)) {
            seen.push_back(vocab.add(t));
        }
        std::sort(seen.begin(), seen.end());
        seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
        for (auto i : seen) {
            vocab.bump_document_frequency(i);
        }
    }
    if (vocab.size() == 0) {
        throw DataError("corpus " + corpus.name() + " has no tokens");
    }
    return vocab;
}

SparseVector vectorize_unibigram(const Citation& c, const Vocabulary& vocab) {
    std::map<std::uint32_t, double> counts;
    for (const auto& t : unibigram_terms(c)) {
        const auto i = vocab.find(t);
        if (i >= 0) {
            counts[static_cast<std::uint32_t>(i)] += 1.0;
        }
    }
    SparseVector v;
    v.indices.reserve(counts.size());
    v.values.reserve(counts.size());
    for (auto [i, n] : counts) {
        v.indices.push_back(i);
        v.values.push_back(n);
    }
    return v;
}

FeatureMatrix unibigram_matrix(const Corpus& corpus, const Vocabulary& vocab) {
    FeatureMatrix m(vocab.size());
    for (const auto& c : corpus.citations()) {
        m.append_row(vectorize_unibigram(c, vocab));
    }
    return m;
}

EmbeddingTable::EmbeddingTable(std::vector<std::string> words, std::vector<float> vectors, std::size_t dim,
                               std::size_t window, std::size_t min_count)
    : words_(std::move(words)), vectors_(std::move(vectors)), dim_(dim), window_(window), min_count_(min_count) {
    if (vectors_.size() != words_.size() * dim_) {
        throw UsageError("embedding vectors do not match words x dim");
    }
    for (std::size_t i = 0; i < words_.size(); ++i) {
        if (!index_.emplace(words_[i], i).second) {
            throw DataError("duplicate word in embedding table: " + words_[i]);
        }
    }
}

std::int64_t EmbeddingTable::find(std::string_view word) const {
    auto it = index_.find(std::string(word));
    return it == index_.end() ? -1 : static_cast<std::int64_t>(it->second);
}

std::span<const float> EmbeddingTable::vector(std::string_view word) const {
    const auto i = find(word);
    if (i < 0) {
        throw DataError("word not in embedding table: " + std::string(word));
    }
    return vector(static_cast<std::size_t>(i));
}

void EmbeddingTable::save_tsv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    out << "#screenkit-embedding\t1\tdim=" << dim_ << "\twindow=" << window_ << "\tmin_count=" << min_count_
        << '\n';
    for (std::size_t i = 0; i < words_.size(); ++i) {
        out << words_[i];
        for (float v : vector(i)) {
            out << '\t' << csv::format_double(static_cast<double>(v));
        }
        out << '\n';
    }
}

EmbeddingTable EmbeddingTable::load_tsv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open " + path.string());
    }
    std::string line;
    if (!std::getline(in, line) || line.rfind("#screenkit-embedding\t1\t", 0) != 0) {
        throw DataError("not a version-1 embedding file: " + path.string());
    }
    std::size_t dim = 0, window = 0, min_count = 0;
    {
        std::istringstream hs(line);
        std::string field;
        while (std::getline(hs, field, '\t')) {
            auto eq = field.find('=');
            if (eq == std::string::npos) {
                continue;
            }
            const auto key = field.substr(0, eq);
            const auto val = std::stoull(field.substr(eq + 1));
            if (key == "dim") {
                dim = val;
            } else if (key == "window") {
                window = val;
            } else if (key == "min_count") {
                min_count = val;
            }
        }
    }
    std::vector<std::string> words;
    std::vector<float> vectors;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string field;
        std::getline(ls, field, '\t');
        words.push_back(field);
        std::size_t n = 0;
        while (std::getline(ls, field, '\t')) {
            vectors.push_back(static_cast<float>(csv::parse_double(field)));
            ++n;
        }
        if (n != dim) {
            throw DataError("embedding row for '" + words.back() + "' has " + std::to_string(n) +
                            " values, expected " + std::to_string(dim));
        }
    }
    return EmbeddingTable(std::move(words), std::move(vectors), dim, window, min_count);
}

CitationEmbedding embed_citation(const Citation& c, const EmbeddingTable& table) {
    if (table.empty()) {
        throw UsageError("embedding table is empty");
    }
    CitationEmbedding e;
    e.vector.assign(table.dim(), 0.0);
    auto add = [&](std::string_view text) {
        for (const auto& tok : tokenize(text)) {
            const auto i = table.find(tok);
            if (i < 0) {
                continue;
            }
            const auto v = table.vector(static_cast<std::size_t>(i));
            for (std::size_t d = 0; d < v.size(); ++d) {
                e.vector[d] += static_cast<double>(v[d]);
            }
            ++e.tokens_in_table;
        }
    };
    add(c.title);
    add(c.abstract);
    if (e.tokens_in_table > 0) {
        for (auto& x : e.vector) {
            x /= static_cast<double>(e.tokens_in_table);
        }
        e.covered = true;
    }
    return e;
}

EmbeddedCorpus embed_corpus(const Corpus& corpus, const EmbeddingTable& table) {
    EmbeddedCorpus out;
    out.matrix.rows = corpus.size();
    out.matrix.cols = table.dim();
    out.matrix.data.reserve(corpus.size() * table.dim());
    for (const auto& c : corpus.citations()) {
        auto e = embed_citation(c, table);
        if (!e.covered) {
            ++out.uncovered;
        }
        out.matrix.data.insert(out.matrix.data.end(), e.vector.begin(), e.vector.end());
    }
    return out;
}

double round2(double v) {
    const double r = std::round(v * 100.0) / 100.0;
    return r == 0.0 ? 0.0 : r;
}

namespace {

template <typename Get, typename Set>
void z_normalize(std::size_t n, Get get, Set set) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mean += get(i);
    }
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = get(i) - mean;
        var += d * d;
    }
    const double sd = std::sqrt(var / static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        set(i, sd > 1e-12 ? round2((get(i) - mean) / sd) : 0.0);
    }
}

} // namespace

DenseMatrix normalize(const DenseMatrix& m, Normalization mode) {
    DenseMatrix out = m;
    out.normalization = mode;
    if (mode == Normalization::Raw) {
        return finalize(m);
    }
    if (m.rows == 0 || m.cols == 0) {
        return out;
    }
    if (mode == Normalization::Row) {
        for (std::size_t r = 0; r < m.rows; ++r) {
            z_normalize(
                m.cols, [&](std::size_t c) { return m.at(r, c); }, [&](std::size_t c, double v) { out.at(r, c) = v; });
        }
    } else {
        for (std::size_t c = 0; c < m.cols; ++c) {
            z_normalize(
                m.rows, [&](std::size_t r) { return m.at(r, c); }, [&](std::size_t r, double v) { out.at(r, c) = v; });
        }
    }
    return out;
}

DenseMatrix finalize(const DenseMatrix& m) {
    DenseMatrix out = m;
    out.normalization = Normalization::Raw;
    for (auto& v : out.data) {
        v = round2(v);
    }
    return out;
}

namespace {

std::vector<double> unit(std::span<const float> v) {
    std::vector<double> out(v.begin(), v.end());
    double n = 0.0;
    for (double x : out) {
        n += x * x;
    }
    n = std::sqrt(n);
    if (n > 0.0) {
        for (auto& x : out) {
            x /= n;
        }
    }
    return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

std::vector<Neighbor> top_k(const EmbeddingTable& table, std::span<const double> query,
                            const std::vector<std::int64_t>& exclude, std::size_t k) {
    std::vector<double> q(query.begin(), query.end());
    const double qn = std::sqrt(dot(q, q));
    if (qn > 0.0) {
        for (auto& x : q) {
            x /= qn;
        }
    }
    std::vector<Neighbor> all;
    all.reserve(table.size());
    for (std::size_t i = 0; i < table.size(); ++i) {
        if (std::find(exclude.begin(), exclude.end(), static_cast<std::int64_t>(i)) != exclude.end()) {
            continue;
        }
        all.push_back({table.word(i), dot(q, unit(table.vector(i)))});
    }
    const auto keep = std::min(k, all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(),
                      [](const Neighbor& a, const Neighbor& b) {
                          return a.similarity != b.similarity ? a.similarity > b.similarity : a.word < b.word;
                      });
    all.resize(keep);
    return all;
}

} // namespace

double cosine_similarity(const EmbeddingTable& table, std::string_view a, std::string_view b) {
    const auto ua = unit(table.vector(a));
    const auto ub = unit(table.vector(b));
    return std::clamp(dot(ua, ub), -1.0, 1.0);
}

std::vector<Neighbor> nearest_neighbors(const EmbeddingTable& table, std::string_view word, std::size_t k) {
    const auto q = unit(table.vector(word));
    return top_k(table, q, {table.find(word)}, k);
}

std::vector<Neighbor> analogy(const EmbeddingTable& table, std::string_view a, std::string_view b,
                              std::string_view c, std::size_t k) {
    const auto ua = unit(table.vector(a));
    const auto ub = unit(table.vector(b));
    const auto uc = unit(table.vector(c));
    std::vector<double> q(table.dim());
    for (std::size_t d = 0; d < q.size(); ++d) {
        q[d] = ub[d] - ua[d] + uc[d];
    }
    return top_k(table, q, {table.find(a), table.find(b), table.find(c)}, k);
}

} // namespace screenkit
