#pragma once

#include "screenkit/active.hpp"
#include "screenkit/stats.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace screenkit::cli {

inline constexpr std::string_view kVersion = "0.1.0";

/// Runs one command line (without the program name). Returns 0 on success,
/// 1 on a usage error, 2 on a data error.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

enum class ReportKind { MetricTable, RankGroups, AlHistogram, InclusionCurve };

std::string_view to_string(ReportKind k);
ReportKind parse_report_kind(std::string_view s);

/// Rank groups for every metric and every prevalence group present in the
/// grid, in the Table-4 layout.
std::vector<std::filesystem::path> emit_metric_table(const ExperimentGrid& grid, const std::filesystem::path& out,
                                                     double alpha = 0.05);
std::vector<std::filesystem::path> emit_rank_groups(const ExperimentGrid& grid, Metric metric,
                                                    std::optional<PrevalenceGroup> group,
                                                    const std::filesystem::path& out, double alpha = 0.05);
/// CSV at `out` plus an SVG next to it.
std::vector<std::filesystem::path> emit_al_histogram(std::span<const double> fractions,
                                                     const std::filesystem::path& out);
std::vector<std::filesystem::path> emit_inclusion_curve(const ALTrace& trace, const std::filesystem::path& out);

/// Reads a trace CSV (iteration, screened, found). The relevant count is the
/// final found count; `corpus_size` defaults to the final screened count.
ALTrace load_trace_csv(const std::filesystem::path& path, std::optional<std::size_t> corpus_size = std::nullopt);

/// `<out>.manifest.json` for file outputs, `<out>/manifest.json` for directories.
std::filesystem::path manifest_path(const std::filesystem::path& out, bool directory);

} // namespace screenkit::cli
