#pragma once

#include "screenkit/featurize.hpp"
#include "screenkit/stats.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace screenkit {

struct ALConfig {
    std::size_t seed_relevant = 5;
    std::size_t seed_irrelevant = 45;
    std::size_t batch_size = 50;
    std::size_t repeats = 500;
    MethodSpec method = find_method(21);
    std::uint64_t seed = 1;
    std::size_t workers = 1;
};

struct ALStep {
    std::size_t iteration = 0;
    std::size_t screened = 0;
    std::size_t found = 0;
};

struct ALTrace {
    std::uint64_t run_seed = 0;
    std::size_t corpus_size = 0;
    std::size_t relevant = 0;
    /// Iteration 0 is the random seed set; each later step reveals one batch.
    std::vector<ALStep> steps;
    /// Corpus positions in reveal order.
    std::vector<std::size_t> revealed;

    /// Fraction of the corpus screened when the last relevant citation was revealed.
    double screened_fraction() const;
};

/// One certainty-sampling run: reveal a random seed set, then repeatedly
/// train on everything revealed and reveal the top-scored hidden batch until
/// every relevant citation is found. Throws DataError when the seed counts
/// exceed the class counts.
ALTrace simulate_run(const FeatureContext& context, const ALConfig& config, std::uint64_t run_seed);

struct ALAggregate {
    std::vector<double> fractions;
    double mean = 0.0;
    double stddev = 0.0;
    std::vector<ALTrace> traces;
};

/// Seed of run r: Rng::derive(config.seed, r).
std::uint64_t run_seed(std::uint64_t master, std::size_t run);

/// config.repeats independent runs; results do not depend on the worker count.
ALAggregate simulate(const FeatureContext& context, const ALConfig& config);

/// Counts per 10%-wide bin of screened fraction; 1.0 falls in the top bin.
std::array<std::size_t, 10> screened_histogram(std::span<const double> fractions);

/// Columns iteration, screened, found.
void write_trace_csv(const std::filesystem::path& path, const ALTrace& trace);
/// Columns review, run, run_seed, screened_fraction.
void write_aggregate_csv(const std::filesystem::path& path, const std::string& review, const ALAggregate& agg);
/// Columns bin_low, bin_high, count (percent bounds).
void write_histogram_csv(const std::filesystem::path& path, const std::array<std::size_t, 10>& histogram);
void write_histogram_svg(const std::filesystem::path& path, const std::array<std::size_t, 10>& histogram);
/// Remaining relevant citations against screened count.
void write_inclusion_csv(const std::filesystem::path& path, const ALTrace& trace);
void write_inclusion_svg(const std::filesystem::path& path, const ALTrace& trace);

} // namespace screenkit
