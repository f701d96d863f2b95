#include "gistcast/synthgen.hpp"

#include "gistcast/common.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <json.hpp>

namespace gistcast {

void SynthConfig::validate() const {
    if (countries < 1 || months < 1 || articles_per_month < 1 || sentences_per_article < 1 || words_per_sentence < 1)
        throw Error("config", "synth counts must be positive");
    if (dim < 2) throw Error("config", "synth dim must be >= 2");
    if (!(signal_fraction > 0.0 && signal_fraction <= 1.0)) throw Error("config", "signal_fraction must be in (0,1]");
    if (!(noise_sigma >= 0.0)) throw Error("config", "noise_sigma must be >= 0");
    if (!(task_correlation >= 0.0 && task_correlation <= 1.0))
        throw Error("config", "task_correlation must be in [0,1]");
    if (lead < 0) throw Error("config", "lead must be >= 0");
}

const std::vector<std::string>& synth_topic_words(int topic) {
    static const std::vector<std::string> crisis{
        "drought",  "famine",   "hunger",   "shortage", "cholera", "locust", "flood",   "refugee",
        "militia",  "looting",  "displaced", "malnutrition", "outbreak", "inflation", "scarcity", "riot"};
    static const std::vector<std::string> calm{
        "harvest", "surplus", "investment", "festival", "school",    "tourism", "export",  "vaccine",
        "wedding", "bridge",  "football",   "concert",  "scholarship", "orchard", "dividend", "pension"};
    return topic == 0 ? crisis : calm;
}

const std::vector<std::string>& synth_background_words() {
    static const std::vector<std::string> words{
        "government", "minister", "region",   "official", "report", "meeting", "city",    "week",
        "people",     "statement", "district", "council", "market", "village", "province", "office",
        "agency",     "radio",    "capital",  "local",    "national", "spokesman", "committee", "mayor"};
    return words;
}

std::string synth_country_code(int index) {
    static const char* codes[] = {"UG", "CD", "GN", "MW", "ML", "NE", "NG", "SN", "BF"};
    if (index < 9) return codes[index];
    return "X" + std::to_string(index);
}

namespace {

std::uint64_t key_seed(std::uint64_t seed, const std::string& country, YearMonth month, std::uint64_t stream) {
    return hash_combine(hash_combine(hash_combine(seed, fnv1a64(country)), static_cast<std::uint64_t>(month.index())),
                        stream);
}

std::string sentence_text(Rng& rng, const std::vector<std::string>& topic, const std::vector<std::string>& background,
                          int words, bool informative) {
    std::string s;
    for (int w = 0; w < words; ++w) {
        // Informative sentences carry mostly topic words; the rest is filler.
        const bool from_topic = informative && (w % 2 == 0 || rng.uniform() < 0.5);
        const auto& pool = from_topic ? topic : background;
        if (!s.empty()) s += ' ';
        s += pool[rng.below(pool.size())];
    }
    s += '.';
    return s;
}

std::string article_id(const std::string& country, YearMonth m, int a) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "-%04d%02d-%03d", m.year, m.month, a);
    return country + buf;
}

}  // namespace

SynthData generate(const SynthConfig& cfg) {
    cfg.validate();
    SynthData out;

    Rng dir_rng(hash_combine(cfg.seed, 0x444952));
    Eigen::VectorXd dir(cfg.dim);
    do {
        for (int i = 0; i < cfg.dim; ++i) dir[i] = dir_rng.normal();
    } while (dir.norm() < 1e-8);
    dir /= dir.norm();
    out.truth.signal_direction = dir;

    const double rho = cfg.task_correlation;
    const double mix = std::sqrt(std::max(0.0, 1.0 - rho * rho));
    const int sentences_per_key = cfg.articles_per_month * cfg.sentences_per_article;
    const int informative_per_key =
        std::max(1, static_cast<int>(std::lround(cfg.signal_fraction * sentences_per_key)));

    std::vector<std::string> ids;
    std::vector<float> data;
    ids.reserve(static_cast<std::size_t>(cfg.countries) * cfg.months * sentences_per_key);
    data.reserve(ids.capacity() * static_cast<std::size_t>(cfg.dim));

    for (int c = 0; c < cfg.countries; ++c) {
        const std::string country = synth_country_code(c);
        Rng country_rng(hash_combine(cfg.seed, fnv1a64("static:" + country)));
        std::array<double, kTimeInvariantFactors.size()> invariant{
            100.0 + 900.0 * country_rng.uniform(), country_rng.uniform(), country_rng.uniform(),
            1e4 * (1.0 + 99.0 * country_rng.uniform())};

        // Text months [start, start+months); label months shifted by lead.
        for (int t = -cfg.lead; t < cfg.months; ++t) {
            const YearMonth month = cfg.start.plus(t);
            Rng rng(key_seed(cfg.seed, country, month, 1));
            const double u = rng.uniform(-1.0, 1.0);
            const double xi_price = rng.uniform(-1.0, 1.0);
            const double xi_social = rng.uniform(-1.0, 1.0);

            LabelRow label;
            label.key = {country, month.plus(cfg.lead)};
            label.fci = std::clamp(3.0 + 1.5 * std::clamp(u, -1.0, 1.0), 1.0, 5.0);
            label.food_price = 100.0 + 20.0 * (rho * u + mix * xi_price);
            label.social_events = 10.0 + 5.0 * (rho * u + mix * xi_social);
            out.labels.push_back(label);

            if (t < 0) continue;
            const CountryMonthKey key{country, month};
            out.truth.true_latent[key] = u;

            std::vector<int> order(static_cast<std::size_t>(sentences_per_key));
            for (int i = 0; i < sentences_per_key; ++i) order[static_cast<std::size_t>(i)] = i;
            rng.shuffle(order);
            std::vector<char> informative(order.size(), 0);
            for (int i = 0; i < informative_per_key; ++i) informative[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = 1;

            const auto& topic = synth_topic_words(u >= 0.0 ? 0 : 1);
            for (int a = 0; a < cfg.articles_per_month; ++a) {
                CorpusArticle art;
                art.article_id = article_id(country, month, a);
                art.key = key;
                for (int s = 0; s < cfg.sentences_per_article; ++s) {
                    const bool inf = informative[static_cast<std::size_t>(a * cfg.sentences_per_article + s)] != 0;
                    art.sentences.push_back(
                        sentence_text(rng, topic, synth_background_words(), cfg.words_per_sentence, inf));
                    const std::string sid = make_sentence_id(art.article_id, static_cast<std::size_t>(s));
                    ids.push_back(sid);
                    if (inf) out.truth.informative_ids.insert(sid);
                    for (int k = 0; k < cfg.dim; ++k) {
                        const double noise = cfg.noise_sigma > 0.0 ? cfg.noise_sigma * rng.normal() : 0.0;
                        data.push_back(static_cast<float>((inf ? u * dir[k] : 0.0) + noise));
                    }
                }
                out.corpus.push_back(std::move(art));
            }
        }

        for (int t = 0; t < cfg.months + cfg.lead; ++t) {
            const YearMonth month = cfg.start.plus(t);
            Rng rng(key_seed(cfg.seed, country, month, 2));
            TraditionalRow r;
            r.key = {country, month};
            r.time_varying = {50.0 + 100.0 * rng.uniform(), rng.uniform(), 90.0 + 20.0 * rng.uniform(),
                              std::floor(20.0 * rng.uniform()), 1.0 + rng.uniform()};
            r.time_invariant = invariant;
            out.traditional.push_back(r);
        }
    }

    std::sort(out.labels.begin(), out.labels.end(), [](const LabelRow& a, const LabelRow& b) { return a.key < b.key; });
    out.table = EmbeddingTable(static_cast<std::uint32_t>(cfg.dim), std::move(ids), std::move(data));
    out.keywords.keywords = {"drought", "famine", "hunger", "harvest", "surplus", "market"};
    return out;
}

std::string truth_json(const SynthTruth& truth) {
    nlohmann::json j;
    j["signal_direction"] = std::vector<double>(truth.signal_direction.data(),
                                                truth.signal_direction.data() + truth.signal_direction.size());
    j["informative_ids"] = truth.informative_ids;
    nlohmann::json latent = nlohmann::json::object();
    for (const auto& [key, u] : truth.true_latent) latent[key.str()] = u;
    j["true_latent"] = latent;
    return j.dump() + "\n";
}

void write_synth(const SynthData& data, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_file_atomic(dir / "corpus.jsonl", serialize_corpus(data.corpus));
    write_table(data.table, dir / "embeddings.emb");
    write_file_atomic(dir / "labels.csv", serialize_labels(data.labels));
    write_file_atomic(dir / "traditional.csv", serialize_traditional(data.traditional));
    std::string kw;
    for (const auto& k : data.keywords.keywords) kw += k + "\n";
    write_file_atomic(dir / "keywords.txt", kw);
    write_file_atomic(dir / "truth.json", truth_json(data.truth));
}

}  // namespace gistcast
