#pragma once

#include "gistcast/bootstrap.hpp"
#include "gistcast/panel.hpp"

#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace gistcast {

enum class GistSide { High, Low };
std::string_view to_string(GistSide side);

struct OccurrenceSource {
    CountryMonthKey key;
    int fold = 0;
    int article_index = 0;
};

/// Min-max normalization. Zero-centered maps to [-1, 1]; otherwise [0, 1].
/// A degenerate range maps everything to the midpoint (0, or 0.5).
std::vector<double> normalize_predictions(std::span<const double> preds, bool zero_centered = true);

/// Elementwise attn_w_i * y_norm.
std::vector<double> article_importance(std::span<const double> attn_w, double y_norm);

struct SentenceScore {
    std::string sentence_id;
    double w_s = 0.0;
};

/// Each occurrence in article i scores importance[i] / n; a sentence drawn
/// more than once gets the sum. Output is sorted by sentence id.
std::vector<SentenceScore> sentence_scores(const PseudoCollection& collection, const SentencePool& pool,
                                           std::span<const double> importance, int n);

/// A sentence in the ranking population. Scores are summed over every
/// occurrence across collections; provenance fields describe the single
/// occurrence with the largest absolute contribution.
struct ScoredSentence {
    std::string sentence_id;
    std::string text;
    double w_s = 0.0;
    OccurrenceSource source;
    double article_weight = 0.0;
    double prediction = 0.0;
};

struct CollectionTrace {
    const PseudoCollection* collection = nullptr;
    std::vector<double> attn_w;
    double prediction = 0.0;  // fci prediction
};

/// Normalizes predictions over all traces, then scores and aggregates.
std::vector<ScoredSentence> score_population(const std::vector<CollectionTrace>& traces,
                                             const std::map<CountryMonthKey, SentencePool>& pools,
                                             bool zero_centered = true);

struct GistRecord {
    ScoredSentence sentence;
    GistSide side = GistSide::High;
};

struct GistReport {
    std::vector<GistRecord> high;
    std::vector<GistRecord> low;
    double fraction = 0.05;
    std::size_t population_size = 0;
    std::vector<double> quantiles;  // w_s at kQuantileLevels
};

inline constexpr std::array<double, 7> kQuantileLevels{0.0, 0.05, 0.25, 0.5, 0.75, 0.95, 1.0};

/// Selects ceil(fraction * N) highest and lowest sentences by w_s, ties
/// broken by ascending sentence id. fraction must lie in (0, 0.5].
GistReport extract_gists(const std::vector<ScoredSentence>& population, double fraction = 0.05);
std::map<std::string, GistReport> extract_gists_per_country(const std::vector<ScoredSentence>& population,
                                                            double fraction = 0.05);

/// TSV "rank side w_s country month fold sentence_id text".
std::string gist_tsv(const GistReport& report);
GistReport parse_gist_tsv(std::string_view tsv);
std::string gist_summary_json(const GistReport& report, std::string_view config_hash = {}, std::uint64_t seed = 0);

}  // namespace gistcast
