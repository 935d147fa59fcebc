#include "screenkit/corpus.hpp"

#include "screenkit/csv.hpp"
#include "screenkit/error.hpp"
#include "screenkit/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace screenkit {

namespace {

bool blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

std::optional<Label> label_from_int(long long v, const std::string& where) {
    if (v == 1) {
        return Label::Relevant;
    }
    if (v == -1) {
        return Label::Irrelevant;
    }
    throw DataError(where + ": label must be 1, -1 or null, got " + std::to_string(v));
}

} // namespace

Corpus::Corpus(std::string name, std::vector<Citation> citations)
    : name_(std::move(name)), citations_(std::move(citations)) {
    index_.reserve(citations_.size());
    for (std::size_t i = 0; i < citations_.size(); ++i) {
        const auto& c = citations_[i];
        if (c.id.empty()) {
            throw DataError("empty citation id at position " + std::to_string(i));
        }
        if (blank(c.title) && blank(c.abstract)) {
            throw DataError("citation " + c.id + " has no title or abstract text");
        }
        if (!index_.emplace(c.id, i).second) {
            throw DataError("duplicate id: " + c.id);
        }
    }
}

std::optional<std::size_t> Corpus::find(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::size_t Corpus::labeled_count() const {
    return static_cast<std::size_t>(std::count_if(citations_.begin(), citations_.end(),
                                                   [](const Citation& c) { return c.label.has_value(); }));
}

std::size_t Corpus::relevant_count() const {
    return static_cast<std::size_t>(std::count_if(citations_.begin(), citations_.end(), [](const Citation& c) {
        return c.label == Label::Relevant;
    }));
}

std::vector<Label> Corpus::labels() const {
    std::vector<Label> out;
    out.reserve(citations_.size());
    for (const auto& c : citations_) {
        if (!c.label) {
            throw DataError("citation " + c.id + " is unlabeled");
        }
        out.push_back(*c.label);
    }
    return out;
}

Corpus Corpus::subset(std::span<const std::size_t> positions, std::string name) const {
    std::vector<Citation> picked;
    picked.reserve(positions.size());
    for (auto p : positions) {
        picked.push_back(citations_.at(p));
    }
    return Corpus(std::move(name), std::move(picked));
}

std::pair<Corpus, Corpus> Corpus::split_labeled() const {
    std::vector<Citation> labeled, unlabeled;
    for (const auto& c : citations_) {
        (c.label ? labeled : unlabeled).push_back(c);
    }
    return {Corpus(name_ + ":labeled", std::move(labeled)), Corpus(name_ + ":unlabeled", std::move(unlabeled))};
}

namespace {

Corpus load_jsonl(const std::filesystem::path& path, std::string_view label_field) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open corpus file: " + path.string());
    }
    std::vector<Citation> citations;
    std::string text;
    std::size_t line_no = 0;
    while (std::getline(in, text)) {
        ++line_no;
        if (blank(text)) {
            continue;
        }
        const std::string where = path.string() + ":" + std::to_string(line_no);
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(text);
        } catch (const nlohmann::json::parse_error& e) {
            throw DataError("malformed record at line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!rec.is_object()) {
            throw DataError("malformed record at line " + std::to_string(line_no) + ": not an object");
        }
        Citation c;
        try {
            const auto& id = rec.at("id");
            c.id = id.is_string() ? id.get<std::string>() : id.dump();
            c.title = rec.at("title").is_null() ? "" : rec.at("title").get<std::string>();
            c.abstract = rec.at("abstract").is_null() ? "" : rec.at("abstract").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw DataError("malformed record at line " + std::to_string(line_no) + ": " + e.what());
        }
        auto lab = rec.find(std::string(label_field));
        if (lab != rec.end() && !lab->is_null()) {
            if (!lab->is_number_integer()) {
                throw DataError("malformed record at line " + std::to_string(line_no) +
                                ": label must be 1, -1 or null");
            }
            c.label = label_from_int(lab->get<long long>(), where);
        }
        citations.push_back(std::move(c));
    }
    if (citations.empty()) {
        throw DataError("empty corpus file: " + path.string());
    }
    return Corpus(path.stem().string(), std::move(citations));
}

Corpus load_csv(const std::filesystem::path& path, std::string_view label_field) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open corpus file: " + path.string());
    }
    std::vector<std::string> header, fields;
    std::size_t line_no = 0;
    if (!csv::read_record(in, header, line_no)) {
        throw DataError("empty corpus file: " + path.string());
    }
    auto column = [&](std::string_view name) -> std::optional<std::size_t> {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) {
            return std::nullopt;
        }
        return static_cast<std::size_t>(it - header.begin());
    };
    const auto id_col = column("id");
    const auto title_col = column("title");
    const auto abstract_col = column("abstract");
    const auto label_col = column(label_field);
    if (!id_col || !title_col || !abstract_col) {
        throw DataError("csv header must contain id,title,abstract: " + path.string());
    }
    std::vector<Citation> citations;
    while (true) {
        const std::size_t start = line_no + 1;
        if (!csv::read_record(in, fields, line_no)) {
            break;
        }
        if (fields.size() == 1 && fields[0].empty()) {
            continue;
        }
        if (fields.size() != header.size()) {
            throw DataError("malformed record at line " + std::to_string(start) + ": expected " +
                            std::to_string(header.size()) + " fields, got " + std::to_string(fields.size()));
        }
        Citation c{fields[*id_col], fields[*title_col], fields[*abstract_col], std::nullopt};
        if (label_col && !blank(fields[*label_col]) && fields[*label_col] != "null") {
            try {
                c.label = label_from_int(std::stoll(fields[*label_col]), path.string());
            } catch (const std::logic_error&) {
                throw DataError("malformed record at line " + std::to_string(start) + ": bad label");
            }
        }
        citations.push_back(std::move(c));
    }
    if (citations.empty()) {
        throw DataError("empty corpus file: " + path.string());
    }
    return Corpus(path.stem().string(), std::move(citations));
}

} // namespace

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format, std::string_view label_field) {
    if (!std::filesystem::exists(path)) {
        throw DataError("corpus file not found: " + path.string());
    }
    return format == CorpusFormat::Csv ? load_csv(path, label_field) : load_jsonl(path, label_field);
}

Corpus load_corpus(const std::filesystem::path& path) {
    return load_corpus(path, path.extension() == ".csv" ? CorpusFormat::Csv : CorpusFormat::Jsonl);
}

void save_corpus_jsonl(const Corpus& corpus, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    for (const auto& c : corpus.citations()) {
        nlohmann::json rec = {{"id", c.id}, {"title", c.title}, {"abstract", c.abstract}};
        rec["label"] = c.label ? nlohmann::json(sign(*c.label)) : nlohmann::json(nullptr);
        out << rec.dump() << '\n';
    }
}

std::string_view to_string(PrevalenceGroup g) {
    switch (g) {
    case PrevalenceGroup::Low:
        return "low";
    case PrevalenceGroup::Mid:
        return "mid";
    case PrevalenceGroup::High:
        return "high";
    }
    return "?";
}

PrevalenceGroup parse_prevalence_group(std::string_view s) {
    if (s == "low") {
        return PrevalenceGroup::Low;
    }
    if (s == "mid") {
        return PrevalenceGroup::Mid;
    }
    if (s == "high") {
        return PrevalenceGroup::High;
    }
    throw UsageError("unknown prevalence group '" + std::string(s) + "' (expected low, mid, high)");
}

PrevalenceGroup prevalence_group(double fraction) {
    if (!(fraction > 0.0) || fraction > 1.0) {
        throw UsageError("prevalence must lie in (0, 1]");
    }
    // basis points, rounded half away from zero like a printed percentage
    const long long bp = std::llround(fraction * 10000.0);
    if (bp < 679) {
        return PrevalenceGroup::Low;
    }
    if (bp < 1345) {
        return PrevalenceGroup::Mid;
    }
    return PrevalenceGroup::High;
}

Prevalence prevalence(const Corpus& corpus) {
    if (corpus.empty()) {
        throw DataError("prevalence of an empty corpus");
    }
    if (!corpus.fully_labeled()) {
        throw DataError("prevalence requires a fully labeled corpus (" + std::to_string(corpus.unlabeled_count()) +
                        " unlabeled)");
    }
    const double f = static_cast<double>(corpus.relevant_count()) / static_cast<double>(corpus.size());
    if (f == 0.0) {
        return {0.0, PrevalenceGroup::Low};
    }
    return {f, prevalence_group(f)};
}

FoldPlan::FoldPlan(std::size_t repetitions, std::size_t k, std::uint64_t seed,
                   std::vector<std::vector<std::vector<std::size_t>>> test_sets)
    : repetitions_(repetitions), k_(k), seed_(seed), test_sets_(std::move(test_sets)) {
    if (!test_sets_.empty()) {
        for (const auto& f : test_sets_.front()) {
            corpus_size_ += f.size();
        }
    }
}

std::vector<std::size_t> FoldPlan::train(std::size_t repetition, std::size_t fold) const {
    std::vector<bool> held(corpus_size_, false);
    for (auto p : test(repetition, fold)) {
        held[p] = true;
    }
    std::vector<std::size_t> out;
    out.reserve(corpus_size_);
    for (std::size_t i = 0; i < corpus_size_; ++i) {
        if (!held[i]) {
            out.push_back(i);
        }
    }
    return out;
}

FoldPlan stratified_folds(std::span<const Label> labels, std::size_t repetitions, std::size_t k,
                          std::uint64_t seed, std::vector<std::string>* warnings) {
    const std::size_t n = labels.size();
    if (k < 2) {
        throw UsageError("k must be at least 2");
    }
    if (k > n) {
        throw DataError("k=" + std::to_string(k) + " exceeds corpus size " + std::to_string(n));
    }
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < n; ++i) {
        (is_relevant(labels[i]) ? pos : neg).push_back(i);
    }
    if (pos.empty()) {
        throw DataError("cannot stratify: no relevant citations");
    }
    if (pos.size() < k && warnings) {
        warnings->push_back("only " + std::to_string(pos.size()) + " relevant citations for k=" + std::to_string(k) +
                            "; some folds have none");
    }
    std::vector<std::vector<std::vector<std::size_t>>> sets(repetitions);
    for (std::size_t r = 0; r < repetitions; ++r) {
        Rng rng(Rng::derive(seed, r));
        auto p = pos;
        auto q = neg;
        rng.shuffle(std::span(p));
        rng.shuffle(std::span(q));
        auto& folds = sets[r];
        folds.assign(k, {});
        std::size_t next = 0;
        for (auto i : p) {
            folds[next++ % k].push_back(i);
        }
        for (auto i : q) {
            folds[next++ % k].push_back(i);
        }
        for (auto& f : folds) {
            std::sort(f.begin(), f.end());
        }
    }
    return FoldPlan(repetitions, k, seed, std::move(sets));
}

FoldPlan stratified_folds(const Corpus& corpus, std::size_t repetitions, std::size_t k, std::uint64_t seed,
                          std::vector<std::string>* warnings) {
    const auto labels = corpus.labels();
    return stratified_folds(std::span<const Label>(labels), repetitions, k, seed, warnings);
}

} // namespace screenkit
