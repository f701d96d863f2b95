#include "gistcast/bootstrap.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace gistcast {

using nlohmann::json;

std::ptrdiff_t SentencePool::find(const std::string& sentence_id) const {
    if (index_.size() == entries.size()) {
        const auto it = index_.find(sentence_id);
        return it == index_.end() ? -1 : static_cast<std::ptrdiff_t>(it->second);
    }
    for (std::size_t i = 0; i < entries.size(); ++i)
        if (entries[i].sentence_id == sentence_id) return static_cast<std::ptrdiff_t>(i);
    return -1;
}

void SentencePool::reindex() {
    index_.clear();
    for (std::size_t i = 0; i < entries.size(); ++i) index_.emplace(entries[i].sentence_id, i);
}

std::string make_sentence_id(const std::string& article_id, std::size_t sentence_index) {
    return article_id + "#" + std::to_string(sentence_index);
}

SentencePool build_pool(const std::vector<CorpusArticle>& articles) {
    SentencePool pool;
    if (!articles.empty()) pool.key = articles.front().key;
    std::vector<const CorpusArticle*> order;
    for (const auto& a : articles) {
        if (a.key != pool.key)
            throw Error("validation", "build_pool: article '" + a.article_id + "' belongs to " + a.key.str() +
                                          ", pool is " + pool.key.str());
        order.push_back(&a);
    }
    std::sort(order.begin(), order.end(),
              [](const CorpusArticle* x, const CorpusArticle* y) { return x->article_id < y->article_id; });
    for (const auto* a : order)
        for (std::size_t i = 0; i < a->sentences.size(); ++i)
            pool.entries.push_back({make_sentence_id(a->article_id, i), a->article_id, a->sentences[i]});
    if (pool.entries.empty()) throw Error("empty_pool", "empty pool for " + pool.key.str());
    pool.reindex();
    return pool;
}

PseudoArticle sample_pseudo_article(const SentencePool& pool, int n, Rng& rng) {
    if (pool.entries.empty()) throw Error("empty_pool", "empty pool for " + pool.key.str());
    if (n < 1) throw Error("validation", "n must be >= 1");
    PseudoArticle a;
    a.picks.resize(static_cast<std::size_t>(n));
    for (auto& p : a.picks) p = static_cast<std::uint32_t>(rng.below(pool.entries.size()));
    return a;
}

std::uint64_t unit_seed(std::uint64_t master, const CountryMonthKey& key, int fold) {
    std::uint64_t h = splitmix64(master);
    h = hash_combine(h, fnv1a64(key.country));
    h = hash_combine(h, static_cast<std::uint64_t>(key.month.year));
    h = hash_combine(h, static_cast<std::uint64_t>(key.month.month));
    h = hash_combine(h, static_cast<std::uint64_t>(fold));
    return h;
}

std::size_t AugmentResult::article_count() const {
    std::size_t total = 0;
    for (const auto& c : collections) total += c.articles.size();
    return total;
}

AugmentResult augment(const std::map<CountryMonthKey, SentencePool>& pools, const BootstrapParams& params) {
    if (params.m < 1 || params.n < 1 || params.K < 1) throw Error("validation", "bootstrap m, n, K must be >= 1");
    AugmentResult out;
    std::vector<const SentencePool*> usable;
    for (const auto& [key, pool] : pools) {
        if (pool.entries.empty())
            out.skipped.push_back(key);
        else
            usable.push_back(&pool);
    }
    const auto K = static_cast<std::size_t>(params.K);
    out.collections.resize(usable.size() * K);
    parallel_for(out.collections.size(), [&](std::size_t u) {
        const SentencePool& pool = *usable[u / K];
        const int fold = static_cast<int>(u % K);
        Rng rng(unit_seed(params.seed, pool.key, fold));
        PseudoCollection c;
        c.key = pool.key;
        c.fold = fold;
        c.articles.reserve(static_cast<std::size_t>(params.m));
        for (int i = 0; i < params.m; ++i) c.articles.push_back(sample_pseudo_article(pool, params.n, rng));
        out.collections[u] = std::move(c);
    });
    return out;
}

std::map<CountryMonthKey, SentencePool> build_pools(const std::vector<CorpusArticle>& corpus) {
    std::map<CountryMonthKey, SentencePool> pools;
    for (const auto& [key, articles] : group_by_key(corpus)) pools.emplace(key, build_pool(articles));
    return pools;
}

std::size_t lower_median(std::vector<std::size_t> values) {
    if (values.empty()) throw Error("validation", "median of empty list");
    std::sort(values.begin(), values.end());
    return values[(values.size() - 1) / 2];
}

CorpusMedians corpus_medians(const std::vector<CorpusArticle>& corpus) {
    if (corpus.empty()) throw Error("validation", "empty corpus");
    std::vector<std::size_t> sentences;
    std::map<CountryMonthKey, std::size_t> per_key;
    for (const auto& a : corpus) {
        sentences.push_back(a.sentences.size());
        ++per_key[a.key];
    }
    std::vector<std::size_t> articles;
    for (const auto& [k, c] : per_key) articles.push_back(c);
    return {lower_median(std::move(sentences)), lower_median(std::move(articles))};
}

std::string serialize_manifest(const std::vector<PseudoCollection>& collections,
                               const std::map<CountryMonthKey, SentencePool>& pools) {
    std::string out;
    for (const auto& c : collections) {
        const auto& pool = pools.at(c.key);
        json arts = json::array();
        for (const auto& a : c.articles) {
            json ids = json::array();
            for (auto p : a.picks) ids.push_back(pool.entries.at(p).sentence_id);
            arts.push_back(std::move(ids));
        }
        json j;
        j["country"] = c.key.country;
        j["month"] = c.key.month.str();
        j["fold"] = c.fold;
        j["articles"] = std::move(arts);
        out += j.dump();
        out += '\n';
    }
    return out;
}

std::vector<PseudoCollection> parse_manifest(std::string_view jsonl,
                                             const std::map<CountryMonthKey, SentencePool>& pools) {
    std::vector<PseudoCollection> out;
    std::istringstream in{std::string(jsonl)};
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (trim(line).empty()) continue;
        const std::string where = "manifest line " + std::to_string(number);
        try {
            const json j = json::parse(line);
            PseudoCollection c;
            c.key.country = j.at("country").get<std::string>();
            c.key.month = YearMonth::parse(j.at("month").get<std::string>());
            c.fold = j.at("fold").get<int>();
            const auto it = pools.find(c.key);
            if (it == pools.end()) throw Error("validation", "no sentence pool for " + c.key.str());
            for (const auto& ids : j.at("articles")) {
                PseudoArticle a;
                for (const auto& id : ids) {
                    const auto idx = it->second.find(id.get<std::string>());
                    if (idx < 0) throw Error("validation", "unknown sentence id '" + id.get<std::string>() + "'");
                    a.picks.push_back(static_cast<std::uint32_t>(idx));
                }
                c.articles.push_back(std::move(a));
            }
            out.push_back(std::move(c));
        } catch (const json::exception& e) {
            throw Error("parse", where + ": " + e.what());
        } catch (const Error& e) {
            throw Error(e.code(), where + ": " + e.what());
        }
    }
    return out;
}

}  // namespace gistcast
