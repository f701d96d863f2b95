#include "run_config.hpp"

#include "gistcast/common.hpp"

#include <cmath>
#include <set>

namespace gistcast {

using nlohmann::json;

void RunConfig::set_seed(std::uint64_t s) {
    seed = s;
    bootstrap.seed = s;
    train.seed = s;
    lda.seed = s;
    synth.seed = s;
}

void RunConfig::validate() const {
    if (bootstrap.m < 1 || bootstrap.n < 1 || bootstrap.K < 1) throw Error("config", "bootstrap m, n, K must be >= 1");
    if (model.d_h < 1) throw Error("config", "model.d_h must be >= 1");
    train.validate();
    if (!(gist_fraction > 0.0 && gist_fraction <= 0.5)) throw Error("config", "gist.fraction must be in (0, 0.5]");
    if (lda.K < 2 || lda.iterations < 1 || lda_infer_iterations < 1) throw Error("config", "invalid lda settings");
    if (!(splits.train_end < splits.dev_end)) throw Error("config", "splits.train_end must precede splits.dev_end");
    if (!(ridge_lambda >= 0.0)) throw Error("config", "baseline.lambda must be >= 0");
    if (lags.lag_min < 1 || lags.lag_min > lags.lag_max) throw Error("config", "invalid baseline lag range");
    if (lead < 0) throw Error("config", "lead must be >= 0");
    synth.validate();
}

json RunConfig::to_json() const {
    json j;
    j["paths"] = {{"corpus", paths.corpus.string()},       {"embeddings", paths.embeddings.string()},
                  {"labels", paths.labels.string()},       {"traditional", paths.traditional.string()},
                  {"keywords", paths.keywords.string()},   {"ipc", paths.ipc.string()},
                  {"out", paths.out.string()}};
    j["seed"] = seed;
    j["bootstrap"] = {{"m", bootstrap.m}, {"n", bootstrap.n}, {"K", bootstrap.K}};
    j["model"] = {{"d_h", model.d_h}, {"shared", model.shared}, {"attention", std::string(to_string(model.attention))}};
    j["train"] = {{"lr", train.lr},
                  {"batch_size", train.batch_size},
                  {"eval_every", train.eval_every},
                  {"patience", train.patience},
                  {"max_steps", train.max_steps},
                  {"task_weights", train.weights.str()},
                  {"beta1", train.beta1},
                  {"beta2", train.beta2},
                  {"eps", train.eps},
                  {"lead", lead}};
    j["gist"] = {{"fraction", gist_fraction}, {"zero_centered", gist_zero_centered}};
    j["lda"] = {{"K", lda.K},
                {"iterations", lda.iterations},
                {"alpha", lda.alpha_value()},
                {"beta", lda.beta},
                {"min_df", lda.vocab.min_df},
                {"max_df_fraction", lda.vocab.max_df_fraction},
                {"infer_iterations", lda_infer_iterations}};
    j["splits"] = {{"train_end", splits.train_end.str()}, {"dev_end", splits.dev_end.str()}};
    j["baseline"] = {{"lambda", ridge_lambda},
                     {"lag_min", lags.lag_min},
                     {"lag_max", lags.lag_max},
                     {"country_dummies", country_dummies}};
    j["synth"] = {{"countries", synth.countries},
                  {"months", synth.months},
                  {"articles_per_month", synth.articles_per_month},
                  {"sentences_per_article", synth.sentences_per_article},
                  {"dim", synth.dim},
                  {"signal_fraction", synth.signal_fraction},
                  {"noise_sigma", synth.noise_sigma},
                  {"task_correlation", synth.task_correlation},
                  {"start", synth.start.str()},
                  {"words_per_sentence", synth.words_per_sentence}};
    return j;
}

namespace {

void check_keys(const json& j, const std::string& section, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw Error("config", "'" + section + "' must be an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : j.items())
        if (!ok.count(k)) throw Error("config", "unknown key '" + (section.empty() ? k : section + "." + k) + "'");
}

template <typename T>
void take(const json& j, const char* key, T& dst) {
    if (j.contains(key)) dst = j.at(key).get<T>();
}

fs::path resolve(const json& j, const char* key, const fs::path& base, const fs::path& fallback) {
    if (!j.contains(key)) return fallback;
    const fs::path p = j.at(key).get<std::string>();
    if (p.empty()) return p;
    return p.is_absolute() ? p : base / p;
}

}  // namespace

RunConfig RunConfig::from_json(const json& j, const fs::path& base_dir) {
    RunConfig c;
    try {
        check_keys(j, "", {"paths", "seed", "bootstrap", "model", "train", "gist", "lda", "splits", "baseline", "synth"});
        if (j.contains("seed")) c.set_seed(j.at("seed").get<std::uint64_t>());
        if (j.contains("paths")) {
            const auto& p = j.at("paths");
            check_keys(p, "paths", {"corpus", "embeddings", "labels", "traditional", "keywords", "ipc", "out"});
            c.paths.corpus = resolve(p, "corpus", base_dir, {});
            c.paths.embeddings = resolve(p, "embeddings", base_dir, {});
            c.paths.labels = resolve(p, "labels", base_dir, {});
            c.paths.traditional = resolve(p, "traditional", base_dir, {});
            c.paths.keywords = resolve(p, "keywords", base_dir, {});
            c.paths.ipc = resolve(p, "ipc", base_dir, {});
            c.paths.out = resolve(p, "out", base_dir, base_dir / "out");
        } else {
            c.paths.out = base_dir / "out";
        }
        if (j.contains("bootstrap")) {
            const auto& b = j.at("bootstrap");
            check_keys(b, "bootstrap", {"m", "n", "K"});
            take(b, "m", c.bootstrap.m);
            take(b, "n", c.bootstrap.n);
            take(b, "K", c.bootstrap.K);
        }
        if (j.contains("model")) {
            const auto& m = j.at("model");
            check_keys(m, "model", {"d_h", "shared", "attention"});
            take(m, "d_h", c.model.d_h);
            take(m, "shared", c.model.shared);
            if (m.contains("attention")) c.model.attention = parse_attention_mode(m.at("attention").get<std::string>());
        }
        if (j.contains("train")) {
            const auto& t = j.at("train");
            check_keys(t, "train", {"lr", "batch_size", "eval_every", "patience", "max_steps", "task_weights", "beta1",
                                    "beta2", "eps", "lead"});
            take(t, "lr", c.train.lr);
            take(t, "batch_size", c.train.batch_size);
            take(t, "eval_every", c.train.eval_every);
            take(t, "patience", c.train.patience);
            take(t, "max_steps", c.train.max_steps);
            take(t, "beta1", c.train.beta1);
            take(t, "beta2", c.train.beta2);
            take(t, "eps", c.train.eps);
            take(t, "lead", c.lead);
            if (t.contains("task_weights")) c.train.weights = TaskWeights::parse(t.at("task_weights").get<std::string>());
        }
        if (j.contains("gist")) {
            const auto& g = j.at("gist");
            check_keys(g, "gist", {"fraction", "zero_centered"});
            take(g, "fraction", c.gist_fraction);
            take(g, "zero_centered", c.gist_zero_centered);
        }
        if (j.contains("lda")) {
            const auto& l = j.at("lda");
            check_keys(l, "lda", {"K", "iterations", "alpha", "beta", "min_df", "max_df_fraction", "infer_iterations"});
            take(l, "K", c.lda.K);
            take(l, "iterations", c.lda.iterations);
            if (l.contains("alpha")) c.lda.alpha = l.at("alpha").get<double>();
            take(l, "beta", c.lda.beta);
            take(l, "min_df", c.lda.vocab.min_df);
            take(l, "max_df_fraction", c.lda.vocab.max_df_fraction);
            take(l, "infer_iterations", c.lda_infer_iterations);
        }
        if (j.contains("splits")) {
            const auto& s = j.at("splits");
            check_keys(s, "splits", {"train_end", "dev_end"});
            if (s.contains("train_end")) c.splits.train_end = YearMonth::parse(s.at("train_end").get<std::string>());
            if (s.contains("dev_end")) c.splits.dev_end = YearMonth::parse(s.at("dev_end").get<std::string>());
        }
        if (j.contains("baseline")) {
            const auto& b = j.at("baseline");
            check_keys(b, "baseline", {"lambda", "lag_min", "lag_max", "country_dummies"});
            take(b, "lambda", c.ridge_lambda);
            take(b, "lag_min", c.lags.lag_min);
            take(b, "lag_max", c.lags.lag_max);
            take(b, "country_dummies", c.country_dummies);
        }
        if (j.contains("synth")) {
            const auto& s = j.at("synth");
            check_keys(s, "synth", {"countries", "months", "articles_per_month", "sentences_per_article", "dim",
                                    "signal_fraction", "noise_sigma", "task_correlation", "start",
                                    "words_per_sentence"});
            take(s, "countries", c.synth.countries);
            take(s, "months", c.synth.months);
            take(s, "articles_per_month", c.synth.articles_per_month);
            take(s, "sentences_per_article", c.synth.sentences_per_article);
            take(s, "dim", c.synth.dim);
            take(s, "signal_fraction", c.synth.signal_fraction);
            take(s, "noise_sigma", c.synth.noise_sigma);
            take(s, "task_correlation", c.synth.task_correlation);
            take(s, "words_per_sentence", c.synth.words_per_sentence);
            if (s.contains("start")) c.synth.start = YearMonth::parse(s.at("start").get<std::string>());
        }
    } catch (const json::exception& e) {
        throw Error("config", e.what());
    }
    c.synth.lead = c.lead;
    c.validate();
    return c;
}

RunConfig RunConfig::load(const fs::path& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw Error("config", path.string() + ": " + e.what());
    }
    return from_json(j, path.parent_path());
}

std::string RunConfig::hash() const {
    // The output directory does not change results, so it is left out.
    json j = to_json();
    j["paths"].erase("out");
    return hex64(fnv1a64(j.dump()));
}

std::string meta_comment(const RunConfig& cfg) {
    return "# config_hash=" + cfg.hash() + " seed=" + std::to_string(cfg.seed) + "\n";
}

void write_meta_sidecar(const fs::path& file, const RunConfig& cfg) {
    const json j = {{"file", file.filename().string()}, {"config_hash", cfg.hash()}, {"seed", cfg.seed}};
    write_file_atomic(fs::path(file.string() + ".meta.json"), j.dump() + "\n");
}

void write_with_comment(const fs::path& file, const std::string& body, const RunConfig& cfg) {
    write_file_atomic(file, meta_comment(cfg) + body);
}

std::string variant_name(const TaskWeights& w) {
    const auto& l = w.lambda;
    const bool f = l[0] > 0.0, p = l[1] > 0.0, s = l[2] > 0.0;
    const bool unit = (!f || l[0] == 1.0) && (!p || l[1] == 1.0) && (!s || l[2] == 1.0);
    if (unit && f) {
        if (!p && !s) return "single";
        if (p && !s) return "double_price";
        if (!p && s) return "double_social";
        return "triple";
    }
    return "weights_" + format_double(l[0]) + "_" + format_double(l[1]) + "_" + format_double(l[2]);
}

SplitSamples split_samples(const std::vector<PseudoCollection>& collections, const PanelData& data,
                           const RunConfig& cfg) {
    SplitSamples out;
    auto set = build_samples(collections, data.pools, data.table, data.labels, cfg.lead);
    out.warnings = std::move(set.warnings);
    std::vector<CountryMonthKey> keys;
    for (const auto& c : collections)
        if (keys.empty() || !(keys.back() == c.key)) keys.push_back(c.key);
    out.assignment = make_splits(keys, cfg.bootstrap.K, cfg.splits);
    for (auto& s : set.samples) {
        switch (classify(s.key.month, cfg.splits)) {
            case Split::Train: out.train.push_back(std::move(s)); break;
            case Split::Dev: out.dev.push_back(std::move(s)); break;
            case Split::Test: out.test.push_back(std::move(s)); break;
        }
    }
    return out;
}

VariantRun train_variant(const SplitSamples& samples, const RunConfig& cfg, const TaskWeights& weights) {
    if (samples.train.empty()) throw Error("empty_split", "no training samples");
    if (samples.dev.empty()) throw Error("empty_split", "no dev samples");
    TrainConfig tc = cfg.train;
    tc.weights = weights;
    VariantRun run;
    run.report = train(samples.train, samples.dev, cfg.model, tc);
    run.dev = evaluate(run.report.best_params, samples.dev, run.report.scaler, run.report.attention);
    if (!samples.test.empty())
        run.test = evaluate(run.report.best_params, samples.test, run.report.scaler, run.report.attention);
    return run;
}

BaselineRun run_baseline(const std::vector<CorpusArticle>& corpus, const std::vector<LabelRow>& labels,
                         const std::vector<TraditionalRow>& traditional, const KeywordConfig& keywords,
                         const RunConfig& cfg) {
    BaselineRun run;
    auto inputs = assemble_inputs(labels, traditional, keyword_features(corpus, keywords), keywords);
    inputs.country_dummies = cfg.country_dummies;
    run.design = build_design(inputs, cfg.lags);
    const auto& d = run.design;

    std::vector<Eigen::Index> fit_rows, test_rows;
    for (std::size_t r = 0; r < d.keys.size(); ++r) {
        const Split s = classify(d.keys[r].month.plus(-cfg.lead), cfg.splits);
        (s == Split::Test ? test_rows : fit_rows).push_back(static_cast<Eigen::Index>(r));
    }
    if (fit_rows.empty()) throw Error("empty_split", "no baseline rows before the test period");
    Eigen::MatrixXd X(static_cast<Eigen::Index>(fit_rows.size()), d.X.cols());
    Eigen::VectorXd y(static_cast<Eigen::Index>(fit_rows.size()));
    for (std::size_t i = 0; i < fit_rows.size(); ++i) {
        X.row(static_cast<Eigen::Index>(i)) = d.X.row(fit_rows[i]);
        y[static_cast<Eigen::Index>(i)] = d.y[fit_rows[i]];
    }
    run.model = fit_adl(X, y, d.columns, cfg.ridge_lambda);
    run.fit_rows = fit_rows.size();
    run.test_rows = test_rows.size();

    if (!test_rows.empty()) {
        Eigen::MatrixXd Xt(static_cast<Eigen::Index>(test_rows.size()), d.X.cols());
        for (std::size_t i = 0; i < test_rows.size(); ++i) Xt.row(static_cast<Eigen::Index>(i)) = d.X.row(test_rows[i]);
        const Eigen::VectorXd pred = predict_adl(run.model, Xt, d.columns);
        std::vector<double> all;
        std::map<std::string, std::vector<double>> by_country;
        for (std::size_t i = 0; i < test_rows.size(); ++i) {
            const double e = pred[static_cast<Eigen::Index>(i)] - d.y[test_rows[i]];
            all.push_back(e);
            by_country[d.keys[static_cast<std::size_t>(test_rows[i])].country].push_back(e);
        }
        run.rmse_test = rmse(all);
        for (const auto& [c, e] : by_country) run.per_country[c] = rmse(e);
    }
    return run;
}

std::vector<CollectionTrace> test_traces(const Checkpoint& ckpt, const std::vector<PseudoCollection>& collections,
                                         const PanelData& data, const RunConfig& cfg) {
    std::vector<const PseudoCollection*> chosen;
    for (const auto& c : collections)
        if (classify(c.key.month, cfg.splits) == Split::Test) chosen.push_back(&c);
    std::vector<CollectionTrace> traces(chosen.size());
    parallel_for(chosen.size(), [&](std::size_t i) {
        const auto& coll = *chosen[i];
        const auto emb = embed_collection(coll, data.pools.at(coll.key), data.table);
        const auto tr = forward(emb.matrix, ckpt.params, ckpt.attention);
        traces[i].collection = &coll;
        traces[i].attn_w.assign(tr.attn_w.data(), tr.attn_w.data() + tr.attn_w.size());
        traces[i].prediction = tr.preds[0];
    });
    return traces;
}

std::string eval_json(const EvalResult& r, const RunConfig& cfg, const std::string& variant) {
    json j;
    j["variant"] = variant;
    j["rmse_fci"] = r.rmse_fci;
    j["rmse_price_z"] = r.rmse_price;
    j["rmse_social_z"] = r.rmse_social;
    j["samples"] = r.samples;
    json pc = json::object();
    for (const auto& [c, v] : r.per_country) pc[c] = v;
    j["per_country"] = pc;
    j["meta"] = {{"config_hash", cfg.hash()}, {"seed", cfg.seed}};
    return j.dump(1) + "\n";
}

}  // namespace gistcast
