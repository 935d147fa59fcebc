#pragma once

#include "screenkit/corpus.hpp"
#include "screenkit/featurize.hpp"
#include "screenkit/svm.hpp"

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace screenkit {

struct EnsembleMember {
    TrainConfig config;
    FeatureKind feature = FeatureKind::W2vRow;
};

/// The three-member rater. The first member is the dominant hypothesis: its
/// thresholded decision alone fixes the sign of the combined score.
struct EnsembleConfig {
    std::vector<EnsembleMember> members = default_members();
    /// One threshold per member; empty means 0 for all.
    std::vector<double> member_thresholds;
    double separation_threshold = 1000.0;
    double max_range = 800.0;
    /// Minimum combined score for 3, 4 and 5 stars.
    std::array<double, 3> star_cutoffs{0.0, 2000.0, 2500.0};

    static std::vector<EnsembleMember> default_members();
    double threshold(std::size_t member) const;
    /// Throws UsageError unless ST > MR, cutoffs increase and thresholds fit.
    void validate() const;
};

struct CombinedScore {
    std::string id;
    double score = 0.0;
    /// Signed vote count; its sign is the dominant member's decision.
    int nv = 0;
    double fv = 0.0;
    double rs = 0.0;
    double ns = 0.0;
};

/// Ranks 1..U with U for the highest score; among ties the earlier index gets
/// the higher rank. Throws DataError on non-finite scores.
std::vector<std::size_t> rank_by_score(std::span<const double> scores);

/// exp(-(U - rank) / U).
double fvote(std::size_t rank, std::size_t u);

/// Maps mean rank in [1, U] linearly onto [0, MR]; MR when U = 1.
double norm_rank(double mean_rank, std::size_t u, double max_range);

/// Vote/rank fusion of per-member score lists (members x U). `ids` may be
/// empty, otherwise it names the U citations. Output is in input order.
std::vector<CombinedScore> generate_combined_score(const std::vector<std::vector<double>>& member_scores,
                                                   std::span<const double> thresholds,
                                                   double separation_threshold, double max_range,
                                                   std::span<const std::string> ids = {});

/// 5, 4, 3 by the cutoffs; 2 for scores in the one-negative-vote band
/// (score > -2 ST + MR); 1 below.
int assign_stars(double score, const EnsembleConfig& config);
std::vector<int> assign_stars(std::span<const CombinedScore> scores, const EnsembleConfig& config);

/// Trains every member on `train_rows` of the context's matrices and fuses
/// their scores on `test_rows`. Output follows `test_rows` order.
std::vector<CombinedScore> relrank_rows(const FeatureContext& context, std::span<const std::size_t> train_rows,
                                        std::span<const Label> train_labels,
                                        std::span<const std::size_t> test_rows, const EnsembleConfig& config);

/// Rates every unlabeled citation of `corpus` using its labeled ones; the
/// result is sorted by score descending (ties by corpus order).
std::vector<CombinedScore> relrank(const FeatureContext& context, const EnsembleConfig& config);

/// Same, building the feature context from labeled + unlabeled text.
std::vector<CombinedScore> relrank(const Corpus& labeled, const Corpus& unlabeled, const EnsembleConfig& config,
                                   const SkipGramOptions& skipgram);

/// Columns id, score, nv, fv, rs, ns, stars, in the given order.
void write_ratings_csv(const std::filesystem::path& path, std::span<const CombinedScore> scores,
                       const EnsembleConfig& config);

} // namespace screenkit
