#include "screenkit/active.hpp"

#include "screenkit/csv.hpp"
#include "screenkit/error.hpp"
#include "screenkit/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

namespace screenkit {

double ALTrace::screened_fraction() const {
    if (steps.empty() || corpus_size == 0) {
        return 0.0;
    }
    return static_cast<double>(steps.back().screened) / static_cast<double>(corpus_size);
}

std::uint64_t run_seed(std::uint64_t master, std::size_t run) {
    return Rng::derive(master, run);
}

ALTrace simulate_run(const FeatureContext& context, const ALConfig& config, std::uint64_t seed) {
    const Corpus& corpus = context.corpus();
    const auto labels = corpus.labels();
    const std::size_t n = corpus.size();
    if (config.batch_size == 0) {
        throw UsageError("batch_size must be at least 1");
    }
    if (config.seed_relevant == 0 || config.seed_irrelevant == 0) {
        throw UsageError("the seed set needs at least one citation of each class");
    }
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < n; ++i) {
        (is_relevant(labels[i]) ? pos : neg).push_back(i);
    }
    if (config.seed_relevant > pos.size() || config.seed_irrelevant > neg.size()) {
        throw DataError("seed set (" + std::to_string(config.seed_relevant) + " relevant, " +
                        std::to_string(config.seed_irrelevant) + " irrelevant) exceeds the corpus class counts (" +
                        std::to_string(pos.size()) + ", " + std::to_string(neg.size()) + ")");
    }
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(pos));
    rng.shuffle(std::span<std::size_t>(neg));

    ALTrace trace;
    trace.run_seed = seed;
    trace.corpus_size = n;
    trace.relevant = pos.size();
    std::vector<char> revealed(n, 0);
    std::size_t found = 0;
    auto reveal = [&](std::size_t i) {
        revealed[i] = 1;
        trace.revealed.push_back(i);
        found += is_relevant(labels[i]) ? 1 : 0;
    };
    for (std::size_t k = 0; k < config.seed_relevant; ++k) {
        reveal(pos[k]);
    }
    for (std::size_t k = 0; k < config.seed_irrelevant; ++k) {
        reveal(neg[k]);
    }
    std::sort(trace.revealed.begin(), trace.revealed.end());
    trace.steps.push_back({0, trace.revealed.size(), found});

    for (std::size_t iteration = 1; found < trace.relevant; ++iteration) {
        std::vector<std::size_t> train_rows, hidden;
        std::vector<Label> train_labels;
        for (std::size_t i = 0; i < n; ++i) {
            if (revealed[i]) {
                train_rows.push_back(i);
                train_labels.push_back(labels[i]);
            } else {
                hidden.push_back(i);
            }
        }
        const auto scores = train_and_score(context, config.method, train_rows, train_labels, hidden);
        std::vector<std::size_t> order(hidden.size());
        std::iota(order.begin(), order.end(), 0);
        const std::size_t take = std::min(config.batch_size, hidden.size());
        std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                          [&](auto a, auto b) { return scores[a] != scores[b] ? scores[a] > scores[b] : a < b; });
        for (std::size_t k = 0; k < take; ++k) {
            reveal(hidden[order[k]]);
        }
        trace.steps.push_back({iteration, trace.revealed.size(), found});
    }
    return trace;
}

ALAggregate simulate(const FeatureContext& context, const ALConfig& config) {
    if (config.repeats == 0) {
        throw UsageError("repeats must be at least 1");
    }
    context.matrix(config.method.feature);
    ALAggregate agg;
    agg.traces.resize(config.repeats);
    std::vector<std::string> errors(config.repeats);
    std::atomic<std::size_t> next{0};
    auto loop = [&] {
        for (std::size_t r = next++; r < config.repeats; r = next++) {
            try {
                agg.traces[r] = simulate_run(context, config, run_seed(config.seed, r));
            } catch (const std::exception& e) {
                errors[r] = e.what();
            }
        }
    };
    const std::size_t workers = std::clamp<std::size_t>(config.workers, 1, config.repeats);
    if (workers == 1) {
        loop();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back(loop);
        }
    }
    for (std::size_t r = 0; r < config.repeats; ++r) {
        if (!errors[r].empty()) {
            // Rerun serially to surface the original exception type.
            simulate_run(context, config, run_seed(config.seed, r));
        }
    }
    double sum = 0.0;
    for (const auto& t : agg.traces) {
        agg.fractions.push_back(t.screened_fraction());
        sum += agg.fractions.back();
    }
    agg.mean = sum / static_cast<double>(config.repeats);
    double ss = 0.0;
    for (double f : agg.fractions) {
        ss += (f - agg.mean) * (f - agg.mean);
    }
    agg.stddev = std::sqrt(ss / static_cast<double>(config.repeats));
    return agg;
}

std::array<std::size_t, 10> screened_histogram(std::span<const double> fractions) {
    std::array<std::size_t, 10> bins{};
    for (double f : fractions) {
        if (!(f > 0.0 && f <= 1.0)) {
            throw DataError("screened fraction outside (0, 1]: " + csv::format_double(f));
        }
        // Multiply in percent and round to absorb representation error (0.3 * 10 = 2.9999...).
        const double pct = std::round(f * 100.0 * 1e9) / 1e9;
        bins[std::min<std::size_t>(9, static_cast<std::size_t>(pct / 10.0))] += 1;
    }
    return bins;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    return out;
}

std::string num(double v) {
    std::ostringstream s;
    s.precision(6);
    s << v;
    return s.str();
}

} // namespace

void write_trace_csv(const std::filesystem::path& path, const ALTrace& trace) {
    auto out = open_out(path);
    csv::write_record(out, {"iteration", "screened", "found"});
    for (const auto& s : trace.steps) {
        csv::write_record(out, {std::to_string(s.iteration), std::to_string(s.screened), std::to_string(s.found)});
    }
}

void write_aggregate_csv(const std::filesystem::path& path, const std::string& review, const ALAggregate& agg) {
    auto out = open_out(path);
    csv::write_record(out, {"review", "run", "run_seed", "screened_fraction"});
    for (std::size_t r = 0; r < agg.traces.size(); ++r) {
        csv::write_record(out, {review, std::to_string(r), std::to_string(agg.traces[r].run_seed),
                                csv::format_double(agg.fractions[r])});
    }
}

void write_histogram_csv(const std::filesystem::path& path, const std::array<std::size_t, 10>& histogram) {
    auto out = open_out(path);
    csv::write_record(out, {"bin_low", "bin_high", "count"});
    for (std::size_t b = 0; b < histogram.size(); ++b) {
        csv::write_record(out, {std::to_string(b * 10), std::to_string(b * 10 + 10), std::to_string(histogram[b])});
    }
}

void write_histogram_svg(const std::filesystem::path& path, const std::array<std::size_t, 10>& histogram) {
    const double w = 520, h = 320, left = 50, bottom = 40, top = 20;
    const double plot_w = w - left - 20, plot_h = h - bottom - top;
    const std::size_t peak = std::max<std::size_t>(1, *std::max_element(histogram.begin(), histogram.end()));
    auto out = open_out(path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n";
    out << "<line x1=\"" << left << "\" y1=\"" << h - bottom << "\" x2=\"" << w - 20 << "\" y2=\"" << h - bottom
        << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << h - bottom
        << "\" stroke=\"black\"/>\n";
    const double bw = plot_w / 10.0;
    for (std::size_t b = 0; b < 10; ++b) {
        const double bh = plot_h * static_cast<double>(histogram[b]) / static_cast<double>(peak);
        const double x = left + bw * static_cast<double>(b);
        out << "<rect x=\"" << num(x + 2) << "\" y=\"" << num(h - bottom - bh) << "\" width=\"" << num(bw - 4)
            << "\" height=\"" << num(bh) << "\" fill=\"steelblue\"/>\n";
        out << "<text x=\"" << num(x + bw / 2) << "\" y=\"" << h - bottom + 15
            << "\" font-size=\"10\" text-anchor=\"middle\">" << b * 10 << "-" << b * 10 + 10 << "</text>\n";
        if (histogram[b] > 0) {
            out << "<text x=\"" << num(x + bw / 2) << "\" y=\"" << num(h - bottom - bh - 3)
                << "\" font-size=\"10\" text-anchor=\"middle\">" << histogram[b] << "</text>\n";
        }
    }
    out << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << h - 5
        << "\" font-size=\"12\" text-anchor=\"middle\">% of citations screened</text>\n";
    out << "<text x=\"12\" y=\"" << top + plot_h / 2 << "\" font-size=\"12\" transform=\"rotate(-90 12 "
        << top + plot_h / 2 << ")\" text-anchor=\"middle\">reviews</text>\n";
    out << "</svg>\n";
}

void write_inclusion_csv(const std::filesystem::path& path, const ALTrace& trace) {
    auto out = open_out(path);
    csv::write_record(out, {"screened", "remaining_relevant"});
    for (const auto& s : trace.steps) {
        csv::write_record(out, {std::to_string(s.screened), std::to_string(trace.relevant - s.found)});
    }
}

void write_inclusion_svg(const std::filesystem::path& path, const ALTrace& trace) {
    const double w = 520, h = 320, left = 50, bottom = 40, top = 20;
    const double plot_w = w - left - 20, plot_h = h - bottom - top;
    const double max_x = std::max<double>(1.0, static_cast<double>(trace.corpus_size));
    const double max_y = std::max<double>(1.0, static_cast<double>(trace.relevant));
    auto out = open_out(path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n";
    out << "<line x1=\"" << left << "\" y1=\"" << h - bottom << "\" x2=\"" << w - 20 << "\" y2=\"" << h - bottom
        << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << h - bottom
        << "\" stroke=\"black\"/>\n";
    out << "<polyline fill=\"none\" stroke=\"firebrick\" stroke-width=\"2\" points=\"";
    // Start from nothing screened with every relevant citation remaining.
    out << num(left) << "," << num(top);
    for (const auto& s : trace.steps) {
        const double x = left + plot_w * static_cast<double>(s.screened) / max_x;
        const double y = h - bottom - plot_h * static_cast<double>(trace.relevant - s.found) / max_y;
        out << " " << num(x) << "," << num(y);
    }
    out << "\"/>\n";
    out << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << h - 5
        << "\" font-size=\"12\" text-anchor=\"middle\">citations screened (of " << trace.corpus_size << ")</text>\n";
    out << "<text x=\"12\" y=\"" << top + plot_h / 2 << "\" font-size=\"12\" transform=\"rotate(-90 12 "
        << top + plot_h / 2 << ")\" text-anchor=\"middle\">relevant remaining (of " << trace.relevant
        << ")</text>\n";
    out << "</svg>\n";
}

} // namespace screenkit
