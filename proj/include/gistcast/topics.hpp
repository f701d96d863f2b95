#pragma once

#include "gistcast/gist.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace gistcast {

/// Porter stemmer on a lowercase ASCII word.
std::string stem(std::string_view word);
const std::unordered_set<std::string>& english_stopwords();

/// Lowercase, split on non-alphanumerics, drop tokens shorter than 3 and
/// stopwords, then stem.
std::vector<std::string> preprocess(std::string_view text);

using TokenDoc = std::vector<std::string>;

struct VocabOptions {
    int min_df = 3;                 // drop terms in fewer documents
    double max_df_fraction = 0.5;   // drop terms in a larger share of documents
};

struct Vocabulary {
    std::vector<std::string> tokens;
    std::vector<int> df;

    std::size_t size() const { return tokens.size(); }
    /// Term id or -1.
    int find(const std::string& token) const;
    void reindex();

private:
    std::unordered_map<std::string, int> index_;
};

Vocabulary build_vocabulary(const std::vector<TokenDoc>& docs, const VocabOptions& opts);

struct LdaConfig {
    int K = 8;
    int iterations = 1000;
    std::optional<double> alpha;  // defaults to 50 / K
    double beta = 0.01;
    std::uint64_t seed = 0;
    VocabOptions vocab;

    double alpha_value() const { return alpha.value_or(50.0 / static_cast<double>(K)); }
};

struct TopicModel {
    int K = 0;
    double alpha = 0.0;
    double beta = 0.0;
    Vocabulary vocab;
    std::vector<std::vector<double>> phi;        // K x |V|
    std::vector<std::vector<int>> assignments;   // per document, per kept token

    /// Top words of topic k by probability, ties by term order.
    std::vector<std::pair<std::string, double>> top_words(int k, std::size_t count) const;
};

/// Called after each Gibbs sweep (1-based) with the model as of that sweep.
using SweepObserver = std::function<void(int sweep, const TopicModel& snapshot)>;

/// Collapsed Gibbs sampling. phi comes from the final sample:
/// (n_kv + beta) / (n_k + |V| beta).
TopicModel fit_lda(const std::vector<TokenDoc>& docs, const LdaConfig& cfg, const SweepObserver& observer = {});

struct Inference {
    std::vector<double> theta;  // (n_dk + alpha) / (n_d + K alpha)
    bool prior_only = false;    // no token was in the vocabulary
};

/// Gibbs sampling of one document's topic assignments with phi fixed.
Inference infer(const TokenDoc& doc, const TopicModel& model, int iterations = 100, std::uint64_t seed = 0);

/// Document-completion perplexity: theta is inferred from even-position
/// tokens and the odd-position tokens are scored.
double heldout_perplexity(const TopicModel& model, const std::vector<TokenDoc>& docs, int iterations,
                          std::uint64_t seed);

struct TopicProfile {
    GistSide side = GistSide::High;
    std::vector<double> mass;  // K entries
    std::size_t sentences = 0;
};

/// Sums inferred topic distributions over the sentences of each side. The
/// inference seed for a sentence depends only on (seed, sentence id).
std::pair<TopicProfile, TopicProfile> profile_gists(const GistReport& report, const TopicModel& model,
                                                    int iterations = 100, std::uint64_t seed = 0);

std::string topic_model_json(const TopicModel& model, std::string_view config_hash = {}, std::uint64_t seed = 0);
TopicModel topic_model_from_json(std::string_view text);
/// "topic rank word probability"
std::string topic_summary_tsv(const TopicModel& model, std::size_t words = 15);
/// "side topic mass"
std::string profile_tsv(const TopicProfile& high, const TopicProfile& low);

}  // namespace gistcast
