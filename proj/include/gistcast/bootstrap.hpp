#pragma once

#include "gistcast/common.hpp"
#include "gistcast/panel.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

namespace gistcast {

struct PoolEntry {
    std::string sentence_id;  // "<article_id>#<sentence index>"
    std::string article_id;
    std::string text;
};

/// Every sentence of one country-month, ordered by (article_id, sentence index).
struct SentencePool {
    CountryMonthKey key;
    std::vector<PoolEntry> entries;

    std::size_t size() const { return entries.size(); }
    /// Index of a sentence id, or -1. Uses the id index when it is current,
    /// otherwise falls back to a linear scan.
    std::ptrdiff_t find(const std::string& sentence_id) const;
    void reindex();

private:
    std::unordered_map<std::string, std::size_t> index_;
};

std::string make_sentence_id(const std::string& article_id, std::size_t sentence_index);

/// A pseudo-article: n draws, stored as indices into the source pool.
/// Repeats are allowed.
struct PseudoArticle {
    std::vector<std::uint32_t> picks;
};

struct PseudoCollection {
    CountryMonthKey key;
    int fold = 0;
    std::vector<PseudoArticle> articles;
};

SentencePool build_pool(const std::vector<CorpusArticle>& articles);

/// n i.i.d. uniform draws with replacement.
PseudoArticle sample_pseudo_article(const SentencePool& pool, int n, Rng& rng);

struct BootstrapParams {
    int m = 85;  // pseudo-articles per collection
    int n = 21;  // sentences per pseudo-article
    int K = 10;  // collections per observed month
    std::uint64_t seed = 0;
};

/// Seed for one (key, fold) unit, derived only from the master seed and the
/// unit's coordinates so any collection can be regenerated on its own.
std::uint64_t unit_seed(std::uint64_t master, const CountryMonthKey& key, int fold);

struct AugmentResult {
    std::vector<PseudoCollection> collections;  // sorted by (key, fold)
    std::vector<CountryMonthKey> skipped;       // keys with empty pools

    std::size_t article_count() const;
};

AugmentResult augment(const std::map<CountryMonthKey, SentencePool>& pools, const BootstrapParams& params);

/// Builds one pool per key, skipping keys without sentences.
std::map<CountryMonthKey, SentencePool> build_pools(const std::vector<CorpusArticle>& corpus);

struct CorpusMedians {
    std::size_t sentences_per_article = 0;
    std::size_t articles_per_key = 0;
};

/// Lower median for even-length lists.
std::size_t lower_median(std::vector<std::size_t> values);
CorpusMedians corpus_medians(const std::vector<CorpusArticle>& corpus);

// Manifest JSONL: {"country","month","fold","articles":[[sentence_id,...],...]}
std::string serialize_manifest(const std::vector<PseudoCollection>& collections,
                               const std::map<CountryMonthKey, SentencePool>& pools);
std::vector<PseudoCollection> parse_manifest(std::string_view jsonl,
                                             const std::map<CountryMonthKey, SentencePool>& pools);

}  // namespace gistcast
