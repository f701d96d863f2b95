#include "gistcast/gist.hpp"

#include "gistcast/common.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

namespace gistcast {

using nlohmann::json;

std::string_view to_string(GistSide side) { return side == GistSide::High ? "high" : "low"; }

std::vector<double> normalize_predictions(std::span<const double> preds, bool zero_centered) {
    std::vector<double> out(preds.size());
    if (preds.empty()) return out;
    const auto [mn, mx] = std::minmax_element(preds.begin(), preds.end());
    const double lo = *mn, hi = *mx;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const double unit = hi > lo ? (preds[i] - lo) / (hi - lo) : 0.5;
        out[i] = zero_centered ? 2.0 * unit - 1.0 : unit;
    }
    return out;
}

std::vector<double> article_importance(std::span<const double> attn_w, double y_norm) {
    std::vector<double> out(attn_w.size());
    for (std::size_t i = 0; i < attn_w.size(); ++i) out[i] = attn_w[i] * y_norm;
    return out;
}

std::vector<SentenceScore> sentence_scores(const PseudoCollection& collection, const SentencePool& pool,
                                           std::span<const double> importance, int n) {
    if (importance.size() != collection.articles.size())
        throw Error("shape", "importance length does not match article count");
    std::map<std::string, double> acc;
    for (std::size_t i = 0; i < collection.articles.size(); ++i) {
        const auto& picks = collection.articles[i].picks;
        if (static_cast<int>(picks.size()) != n) throw Error("shape", "pseudo-article length differs from n");
        const double share = importance[i] / static_cast<double>(n);
        for (auto p : picks) acc[pool.entries.at(p).sentence_id] += share;
    }
    std::vector<SentenceScore> out;
    out.reserve(acc.size());
    for (auto& [id, w] : acc) out.push_back({id, w});
    return out;
}

std::vector<ScoredSentence> score_population(const std::vector<CollectionTrace>& traces,
                                             const std::map<CountryMonthKey, SentencePool>& pools,
                                             bool zero_centered) {
    std::vector<double> preds;
    preds.reserve(traces.size());
    for (const auto& t : traces) preds.push_back(t.prediction);
    const auto y_norm = normalize_predictions(preds, zero_centered);

    struct Acc {
        ScoredSentence s;
        double best_abs = -1.0;
    };
    std::map<std::string, Acc> acc;
    for (std::size_t c = 0; c < traces.size(); ++c) {
        const auto& coll = *traces[c].collection;
        const auto& pool = pools.at(coll.key);
        const auto importance = article_importance(traces[c].attn_w, y_norm[c]);
        if (importance.size() != coll.articles.size()) throw Error("shape", "attention length does not match articles");
        for (std::size_t i = 0; i < coll.articles.size(); ++i) {
            const auto& picks = coll.articles[i].picks;
            const double share = importance[i] / static_cast<double>(picks.size());
            for (auto p : picks) {
                const auto& entry = pool.entries.at(p);
                auto& a = acc[entry.sentence_id];
                if (a.best_abs < 0.0) {
                    a.s.sentence_id = entry.sentence_id;
                    a.s.text = entry.text;
                }
                a.s.w_s += share;
                if (std::abs(share) > a.best_abs) {
                    a.best_abs = std::abs(share);
                    a.s.source = {coll.key, coll.fold, static_cast<int>(i)};
                    a.s.article_weight = importance[i];
                    a.s.prediction = traces[c].prediction;
                }
            }
        }
    }
    std::vector<ScoredSentence> out;
    out.reserve(acc.size());
    for (auto& [id, a] : acc) out.push_back(std::move(a.s));
    return out;
}

namespace {

std::vector<double> quantiles(std::vector<double> v) {
    std::vector<double> out;
    if (v.empty()) return out;
    std::sort(v.begin(), v.end());
    for (double q : kQuantileLevels) {
        const double pos = q * static_cast<double>(v.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const auto hi = std::min(lo + 1, v.size() - 1);
        out.push_back(v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]));
    }
    return out;
}

}  // namespace

GistReport extract_gists(const std::vector<ScoredSentence>& population, double fraction) {
    if (!(fraction > 0.0 && fraction <= 0.5)) throw Error("config", "gist fraction must lie in (0, 0.5]");
    if (population.empty()) throw Error("validation", "empty gist population");
    GistReport r;
    r.fraction = fraction;
    r.population_size = population.size();
    const auto count = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(population.size()) - 1e-9));

    std::vector<std::size_t> idx(population.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    auto by_id = [&](std::size_t a, std::size_t b) { return population[a].sentence_id < population[b].sentence_id; };

    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(count), idx.end(),
                      [&](std::size_t a, std::size_t b) {
                          if (population[a].w_s != population[b].w_s) return population[a].w_s > population[b].w_s;
                          return by_id(a, b);
                      });
    for (std::size_t i = 0; i < count; ++i) r.high.push_back({population[idx[i]], GistSide::High});

    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(count), idx.end(),
                      [&](std::size_t a, std::size_t b) {
                          if (population[a].w_s != population[b].w_s) return population[a].w_s < population[b].w_s;
                          return by_id(a, b);
                      });
    for (std::size_t i = 0; i < count; ++i) r.low.push_back({population[idx[i]], GistSide::Low});

    std::vector<double> scores;
    scores.reserve(population.size());
    for (const auto& s : population) scores.push_back(s.w_s);
    r.quantiles = quantiles(std::move(scores));
    return r;
}

std::map<std::string, GistReport> extract_gists_per_country(const std::vector<ScoredSentence>& population,
                                                            double fraction) {
    std::map<std::string, std::vector<ScoredSentence>> groups;
    for (const auto& s : population) groups[s.source.key.country].push_back(s);
    std::map<std::string, GistReport> out;
    for (const auto& [country, members] : groups) out.emplace(country, extract_gists(members, fraction));
    return out;
}

namespace {

std::string clean_field(const std::string& s) {
    std::string out = s;
    for (char& c : out)
        if (c == '\t' || c == '\n' || c == '\r') c = ' ';
    return out;
}

}  // namespace

std::string gist_tsv(const GistReport& report) {
    std::string out = "rank\tside\tw_s\tcountry\tmonth\tfold\tsentence_id\ttext\n";
    for (const auto* side : {&report.high, &report.low}) {
        std::size_t rank = 0;
        for (const auto& rec : *side) {
            const auto& s = rec.sentence;
            out += std::to_string(++rank) + '\t' + std::string(to_string(rec.side)) + '\t' + format_double(s.w_s) + '\t' +
                   s.source.key.country + '\t' + s.source.key.month.str() + '\t' + std::to_string(s.source.fold) + '\t' +
                   clean_field(s.sentence_id) + '\t' + clean_field(s.text) + '\n';
        }
    }
    return out;
}

GistReport parse_gist_tsv(std::string_view tsv) {
    GistReport r;
    std::istringstream in{std::string(tsv)};
    std::string line;
    std::size_t number = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++number;
        if (line.empty() || line[0] == '#') continue;
        if (!header) {
            header = true;
            continue;
        }
        const auto f = split(line, '\t');
        if (f.size() != 8) throw Error("parse", "gist tsv line " + std::to_string(number) + ": expected 8 fields");
        GistRecord rec;
        rec.side = f[1] == "high" ? GistSide::High : GistSide::Low;
        rec.sentence.w_s = parse_double(f[2], "w_s");
        rec.sentence.source.key = {f[3], YearMonth::parse(f[4])};
        rec.sentence.source.fold = static_cast<int>(parse_int(f[5], "fold"));
        rec.sentence.sentence_id = f[6];
        rec.sentence.text = f[7];
        (rec.side == GistSide::High ? r.high : r.low).push_back(std::move(rec));
    }
    return r;
}

std::string gist_summary_json(const GistReport& report, std::string_view config_hash, std::uint64_t seed) {
    json j;
    j["fraction"] = report.fraction;
    j["population_size"] = report.population_size;
    j["high_count"] = report.high.size();
    j["low_count"] = report.low.size();
    json q = json::object();
    for (std::size_t i = 0; i < report.quantiles.size() && i < kQuantileLevels.size(); ++i)
        q[format_double(kQuantileLevels[i])] = report.quantiles[i];
    j["score_quantiles"] = q;
    if (!config_hash.empty()) j["meta"] = {{"config_hash", std::string(config_hash)}, {"seed", seed}};
    return j.dump(1) + "\n";
}

}  // namespace gistcast
