#include "gistcast/topics.hpp"

#include "gistcast/common.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>

#include <json.hpp>

namespace gistcast {

using nlohmann::json;

const std::unordered_set<std::string>& english_stopwords() {
    static const std::unordered_set<std::string> words{
        "a", "about", "above", "after", "again", "against", "all", "also", "am", "an", "and", "any", "are", "aren",
        "as", "at", "be", "because", "been", "before", "being", "below", "between", "both", "but", "by", "can",
        "could", "couldn", "did", "didn", "do", "does", "doesn", "doing", "don", "down", "during", "each", "few",
        "for", "from", "further", "had", "hadn", "has", "hasn", "have", "haven", "having", "he", "her", "here",
        "hers", "herself", "him", "himself", "his", "how", "i", "if", "in", "into", "is", "isn", "it", "its",
        "itself", "just", "me", "might", "more", "most", "must", "my", "myself", "no", "nor", "not", "now", "of",
        "off", "on", "once", "only", "or", "other", "our", "ours", "ourselves", "out", "over", "own", "said",
        "same", "say", "says", "she", "should", "shouldn", "so", "some", "such", "than", "that", "the", "their",
        "theirs", "them", "themselves", "then", "there", "these", "they", "this", "those", "through", "to", "too",
        "under", "until", "up", "upon", "very", "was", "wasn", "we", "were", "weren", "what", "when", "where",
        "which", "while", "who", "whom", "why", "will", "with", "won", "would", "wouldn", "you", "your", "yours",
        "yourself", "yourselves", "its", "per", "via", "yet", "one", "two", "new", "year", "years", "last",
        "first", "since", "many", "much", "may", "mr", "mrs", "ms"};
    return words;
}

std::vector<std::string> preprocess(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        if (cur.size() >= 3 && !english_stopwords().count(cur)) out.push_back(stem(cur));
        cur.clear();
    };
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isalnum(c))
            cur.push_back(static_cast<char>(std::tolower(c)));
        else
            flush();
    }
    flush();
    return out;
}

int Vocabulary::find(const std::string& token) const {
    if (index_.size() != tokens.size()) {
        for (std::size_t i = 0; i < tokens.size(); ++i)
            if (tokens[i] == token) return static_cast<int>(i);
        return -1;
    }
    const auto it = index_.find(token);
    return it == index_.end() ? -1 : it->second;
}

void Vocabulary::reindex() {
    index_.clear();
    for (std::size_t i = 0; i < tokens.size(); ++i) index_.emplace(tokens[i], static_cast<int>(i));
}

Vocabulary build_vocabulary(const std::vector<TokenDoc>& docs, const VocabOptions& opts) {
    std::map<std::string, int> df;
    for (const auto& d : docs) {
        std::vector<std::string> uniq(d.begin(), d.end());
        std::sort(uniq.begin(), uniq.end());
        uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
        for (const auto& t : uniq) ++df[t];
    }
    const double max_df = opts.max_df_fraction * static_cast<double>(docs.size());
    Vocabulary v;
    for (const auto& [t, n] : df) {
        if (n < opts.min_df || static_cast<double>(n) > max_df) continue;
        v.tokens.push_back(t);
        v.df.push_back(n);
    }
    v.reindex();
    return v;
}

std::vector<std::pair<std::string, double>> TopicModel::top_words(int k, std::size_t count) const {
    const auto& row = phi.at(static_cast<std::size_t>(k));
    std::vector<std::size_t> idx(row.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    count = std::min(count, idx.size());
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(count), idx.end(),
                      [&](std::size_t a, std::size_t b) { return row[a] != row[b] ? row[a] > row[b] : a < b; });
    std::vector<std::pair<std::string, double>> out;
    for (std::size_t i = 0; i < count; ++i) out.emplace_back(vocab.tokens[idx[i]], row[idx[i]]);
    return out;
}

namespace {

struct GibbsState {
    int K;
    std::size_t V;
    std::vector<std::vector<int>> words;  // per doc, term ids
    std::vector<std::vector<int>> z;
    std::vector<int> n_kv;                // K x V
    std::vector<int> n_k;
    std::vector<std::vector<int>> n_dk;

    void fill_phi(TopicModel& m) const {
        m.phi.assign(static_cast<std::size_t>(K), std::vector<double>(V));
        const double vb = static_cast<double>(V) * m.beta;
        for (int k = 0; k < K; ++k)
            for (std::size_t v = 0; v < V; ++v)
                m.phi[static_cast<std::size_t>(k)][v] =
                    (n_kv[static_cast<std::size_t>(k) * V + v] + m.beta) / (n_k[static_cast<std::size_t>(k)] + vb);
        m.assignments = z;
    }
};

int sample_index(const std::vector<double>& weights, double total, Rng& rng) {
    double u = rng.uniform() * total;
    for (std::size_t k = 0; k + 1 < weights.size(); ++k) {
        u -= weights[k];
        if (u < 0.0) return static_cast<int>(k);
    }
    return static_cast<int>(weights.size() - 1);
}

}  // namespace

TopicModel fit_lda(const std::vector<TokenDoc>& docs, const LdaConfig& cfg, const SweepObserver& observer) {
    if (cfg.K < 2) throw Error("config", "LDA needs K >= 2");
    if (cfg.iterations < 1) throw Error("config", "LDA needs iterations >= 1");
    TopicModel model;
    model.K = cfg.K;
    model.alpha = cfg.alpha_value();
    model.beta = cfg.beta;
    model.vocab = build_vocabulary(docs, cfg.vocab);
    if (model.vocab.size() == 0) throw Error("empty_corpus", "empty corpus: no terms survive vocabulary pruning");

    GibbsState st;
    st.K = cfg.K;
    st.V = model.vocab.size();
    st.n_kv.assign(static_cast<std::size_t>(cfg.K) * st.V, 0);
    st.n_k.assign(static_cast<std::size_t>(cfg.K), 0);
    Rng rng(cfg.seed);
    std::size_t total_tokens = 0;
    for (const auto& d : docs) {
        std::vector<int> w;
        for (const auto& t : d) {
            const int id = model.vocab.find(t);
            if (id >= 0) w.push_back(id);
        }
        std::vector<int> z(w.size());
        std::vector<int> counts(static_cast<std::size_t>(cfg.K), 0);
        for (std::size_t i = 0; i < w.size(); ++i) {
            z[i] = static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.K)));
            ++counts[static_cast<std::size_t>(z[i])];
            ++st.n_kv[static_cast<std::size_t>(z[i]) * st.V + static_cast<std::size_t>(w[i])];
            ++st.n_k[static_cast<std::size_t>(z[i])];
        }
        total_tokens += w.size();
        st.words.push_back(std::move(w));
        st.z.push_back(std::move(z));
        st.n_dk.push_back(std::move(counts));
    }
    if (total_tokens == 0) throw Error("empty_corpus", "empty corpus: no in-vocabulary tokens");

    const double vb = static_cast<double>(st.V) * model.beta;
    std::vector<double> p(static_cast<std::size_t>(cfg.K));
    for (int sweep = 1; sweep <= cfg.iterations; ++sweep) {
        for (std::size_t d = 0; d < st.words.size(); ++d) {
            auto& w = st.words[d];
            auto& z = st.z[d];
            auto& ndk = st.n_dk[d];
            for (std::size_t i = 0; i < w.size(); ++i) {
                const auto v = static_cast<std::size_t>(w[i]);
                auto k_old = static_cast<std::size_t>(z[i]);
                --ndk[k_old];
                --st.n_kv[k_old * st.V + v];
                --st.n_k[k_old];
                double total = 0.0;
                for (std::size_t k = 0; k < p.size(); ++k) {
                    p[k] = (ndk[k] + model.alpha) * (st.n_kv[k * st.V + v] + model.beta) / (st.n_k[k] + vb);
                    total += p[k];
                }
                const auto k_new = static_cast<std::size_t>(sample_index(p, total, rng));
                z[i] = static_cast<int>(k_new);
                ++ndk[k_new];
                ++st.n_kv[k_new * st.V + v];
                ++st.n_k[k_new];
            }
        }
        if (observer) {
            st.fill_phi(model);
            observer(sweep, model);
        }
    }
    st.fill_phi(model);
    return model;
}

Inference infer(const TokenDoc& doc, const TopicModel& model, int iterations, std::uint64_t seed) {
    const auto K = static_cast<std::size_t>(model.K);
    std::vector<std::size_t> w;
    for (const auto& t : doc) {
        const int id = model.vocab.find(t);
        if (id >= 0) w.push_back(static_cast<std::size_t>(id));
    }
    Inference out;
    if (w.empty()) {
        out.theta.assign(K, 1.0 / static_cast<double>(K));
        out.prior_only = true;
        return out;
    }
    Rng rng(seed);
    std::vector<int> z(w.size());
    std::vector<int> ndk(K, 0);
    for (auto& zi : z) {
        zi = static_cast<int>(rng.below(K));
        ++ndk[static_cast<std::size_t>(zi)];
    }
    std::vector<double> p(K);
    for (int it = 0; it < iterations; ++it) {
        for (std::size_t i = 0; i < w.size(); ++i) {
            --ndk[static_cast<std::size_t>(z[i])];
            double total = 0.0;
            for (std::size_t k = 0; k < K; ++k) {
                p[k] = (ndk[k] + model.alpha) * model.phi[k][w[i]];
                total += p[k];
            }
            z[i] = sample_index(p, total, rng);
            ++ndk[static_cast<std::size_t>(z[i])];
        }
    }
    const double denom = static_cast<double>(w.size()) + static_cast<double>(K) * model.alpha;
    out.theta.resize(K);
    for (std::size_t k = 0; k < K; ++k) out.theta[k] = (ndk[k] + model.alpha) / denom;
    return out;
}

double heldout_perplexity(const TopicModel& model, const std::vector<TokenDoc>& docs, int iterations,
                          std::uint64_t seed) {
    double log_lik = 0.0;
    std::size_t scored = 0;
    for (std::size_t d = 0; d < docs.size(); ++d) {
        TokenDoc observed, held;
        for (std::size_t i = 0; i < docs[d].size(); ++i) (i % 2 == 0 ? observed : held).push_back(docs[d][i]);
        const auto theta = infer(observed, model, iterations, hash_combine(seed, d)).theta;
        for (const auto& t : held) {
            const int v = model.vocab.find(t);
            if (v < 0) continue;
            double p = 0.0;
            for (std::size_t k = 0; k < theta.size(); ++k) p += theta[k] * model.phi[k][static_cast<std::size_t>(v)];
            log_lik += std::log(p);
            ++scored;
        }
    }
    if (scored == 0) throw Error("validation", "no held-out tokens in vocabulary");
    return std::exp(-log_lik / static_cast<double>(scored));
}

std::pair<TopicProfile, TopicProfile> profile_gists(const GistReport& report, const TopicModel& model, int iterations,
                                                    std::uint64_t seed) {
    auto run = [&](const std::vector<GistRecord>& recs, GistSide side) {
        TopicProfile prof;
        prof.side = side;
        prof.mass.assign(static_cast<std::size_t>(model.K), 0.0);
        for (const auto& r : recs) {
            const auto theta = infer(preprocess(r.sentence.text), model, iterations,
                                     hash_combine(seed, fnv1a64(r.sentence.sentence_id)))
                                   .theta;
            for (std::size_t k = 0; k < theta.size(); ++k) prof.mass[k] += theta[k];
            ++prof.sentences;
        }
        return prof;
    };
    return {run(report.high, GistSide::High), run(report.low, GistSide::Low)};
}

std::string topic_model_json(const TopicModel& model, std::string_view config_hash, std::uint64_t seed) {
    json j;
    j["K"] = model.K;
    j["alpha"] = model.alpha;
    j["beta"] = model.beta;
    j["vocab"] = model.vocab.tokens;
    j["df"] = model.vocab.df;
    j["phi"] = model.phi;
    j["note"] = "tokens are Porter-stemmed, not lemmatized";
    if (!config_hash.empty()) j["meta"] = {{"config_hash", std::string(config_hash)}, {"seed", seed}};
    return j.dump() + "\n";
}

TopicModel topic_model_from_json(std::string_view text) {
    try {
        const json j = json::parse(text);
        TopicModel m;
        m.K = j.at("K").get<int>();
        m.alpha = j.at("alpha").get<double>();
        m.beta = j.at("beta").get<double>();
        m.vocab.tokens = j.at("vocab").get<std::vector<std::string>>();
        m.vocab.df = j.value("df", std::vector<int>(m.vocab.tokens.size(), 1));
        m.vocab.reindex();
        m.phi = j.at("phi").get<std::vector<std::vector<double>>>();
        if (static_cast<int>(m.phi.size()) != m.K) throw Error("shape", "phi row count differs from K");
        for (const auto& row : m.phi)
            if (row.size() != m.vocab.size()) throw Error("shape", "phi row length differs from vocabulary");
        return m;
    } catch (const json::exception& e) {
        throw Error("parse", std::string("topic model: ") + e.what());
    }
}

std::string topic_summary_tsv(const TopicModel& model, std::size_t words) {
    std::string out = "topic\trank\tword\tprobability\n";
    for (int k = 0; k < model.K; ++k) {
        std::size_t rank = 0;
        for (const auto& [w, p] : model.top_words(k, words))
            out += std::to_string(k) + '\t' + std::to_string(++rank) + '\t' + w + '\t' + format_double(p) + '\n';
    }
    return out;
}

std::string profile_tsv(const TopicProfile& high, const TopicProfile& low) {
    std::string out = "side\ttopic\tmass\n";
    for (const auto* p : {&high, &low})
        for (std::size_t k = 0; k < p->mass.size(); ++k)
            out += std::string(to_string(p->side)) + '\t' + std::to_string(k) + '\t' + format_double(p->mass[k]) + '\n';
    return out;
}

}  // namespace gistcast
