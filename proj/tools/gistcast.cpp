// gistcast command-line driver: one subcommand per pipeline stage.

#include "run_config.hpp"

#include "gistcast/common.hpp"

#include <cstdio>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

using namespace gistcast;
using nlohmann::json;

namespace {

struct Flags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string task_weights;
    std::string attention;
    bool per_country = false;
};

RunConfig resolve_config(const Flags& f) {
    RunConfig cfg = f.config.empty() ? RunConfig::from_json(json::object(), fs::current_path())
                                     : RunConfig::load(f.config);
    if (f.seed) cfg.set_seed(*f.seed);
    if (!f.out.empty()) cfg.paths.out = f.out;
    if (!f.task_weights.empty()) cfg.train.weights = TaskWeights::parse(f.task_weights);
    if (!f.attention.empty()) cfg.model.attention = parse_attention_mode(f.attention);
    cfg.validate();
    return cfg;
}

const fs::path& require_path(const fs::path& p, const char* name) {
    if (p.empty()) throw Error("config", std::string("paths.") + name + " is not set");
    if (!fs::exists(p)) throw Error("missing_input", std::string("paths.") + name + " does not exist: " + p.string());
    return p;
}

fs::path manifest_path(const RunConfig& cfg) { return cfg.paths.out / "manifest.jsonl"; }
fs::path variant_dir(const RunConfig& cfg) { return cfg.paths.out / variant_name(cfg.train.weights); }

json meta(const RunConfig& cfg) { return {{"config_hash", cfg.hash()}, {"seed", cfg.seed}}; }

PanelData load_panel(const RunConfig& cfg, bool with_embeddings, bool with_labels) {
    PanelData d;
    d.corpus = load_corpus(require_path(cfg.paths.corpus, "corpus"));
    d.pools = build_pools(d.corpus);
    if (with_embeddings) d.table = read_table(require_path(cfg.paths.embeddings, "embeddings"));
    if (with_labels) d.labels = load_labels(require_path(cfg.paths.labels, "labels"));
    return d;
}

std::vector<PseudoCollection> load_manifest(const RunConfig& cfg, const PanelData& d) {
    const auto p = manifest_path(cfg);
    if (!fs::exists(p)) throw Error("missing_input", "manifest not found: " + p.string() + " (run bootstrap first)");
    return parse_manifest(read_file(p), d.pools);
}

Checkpoint load_checkpoint(const RunConfig& cfg) {
    const auto p = variant_dir(cfg) / "checkpoint.json";
    if (!fs::exists(p)) throw Error("missing_input", "checkpoint not found: " + p.string() + " (run train first)");
    return checkpoint_from_json(read_file(p));
}

void cmd_interpolate(const RunConfig& cfg) {
    const auto series = load_ipc(require_path(cfg.paths.ipc, "ipc"));
    std::vector<LabelRow> rows;
    for (const auto& [country, s] : series)
        for (const auto& mv : interpolate_ipc(s)) {
            LabelRow r;
            r.key = {country, mv.month};
            r.fci = mv.value;
            rows.push_back(r);
        }
    fs::create_directories(cfg.paths.out);
    write_with_comment(cfg.paths.out / "interpolated_fci.csv", serialize_labels(rows), cfg);
    std::cout << rows.size() << " interpolated rows\n";
}

void cmd_synth(const RunConfig& cfg) {
    const SynthData data = generate(cfg.synth);
    const fs::path& dir = cfg.paths.out;
    fs::create_directories(dir);
    write_file_atomic(dir / "corpus.jsonl", serialize_corpus(data.corpus));
    write_meta_sidecar(dir / "corpus.jsonl", cfg);
    write_table(data.table, dir / "embeddings.emb");
    write_meta_sidecar(dir / "embeddings.emb", cfg);
    write_with_comment(dir / "labels.csv", serialize_labels(data.labels), cfg);
    write_with_comment(dir / "traditional.csv", serialize_traditional(data.traditional), cfg);
    std::string kw;
    for (const auto& k : data.keywords.keywords) kw += k + "\n";
    write_with_comment(dir / "keywords.txt", kw, cfg);
    auto truth = json::parse(truth_json(data.truth));
    truth["meta"] = meta(cfg);
    write_file_atomic(dir / "truth.json", truth.dump() + "\n");
    std::cout << data.corpus.size() << " articles, " << data.table.rows() << " sentences, " << data.labels.size()
              << " label rows\n";
}

void cmd_bootstrap(const RunConfig& cfg) {
    const PanelData d = load_panel(cfg, false, false);
    const auto result = augment(d.pools, cfg.bootstrap);
    fs::create_directories(cfg.paths.out);
    write_file_atomic(manifest_path(cfg), serialize_manifest(result.collections, d.pools));
    write_meta_sidecar(manifest_path(cfg), cfg);

    std::vector<CountryMonthKey> keys;
    for (const auto& [key, pool] : d.pools) keys.push_back(key);
    const auto splits = make_splits(keys, cfg.bootstrap.K, cfg.splits);
    const auto med = corpus_medians(d.corpus);
    json summary;
    summary["collections"] = result.collections.size();
    summary["pseudo_articles"] = result.article_count();
    json skipped = json::array();
    for (const auto& k : result.skipped) skipped.push_back(k.str());
    summary["skipped"] = skipped;
    summary["corpus_medians"] = {{"sentences_per_article", med.sentences_per_article},
                                 {"articles_per_key", med.articles_per_key}};
    summary["splits"] = {{"train", splits.train_samples}, {"dev", splits.dev_samples}, {"test", splits.test_samples}};
    summary["meta"] = meta(cfg);
    write_file_atomic(cfg.paths.out / "bootstrap.json", summary.dump(1) + "\n");
    std::cout << result.collections.size() << " collections, " << result.article_count() << " pseudo-articles\n";
}

void cmd_train(const RunConfig& cfg) {
    const PanelData d = load_panel(cfg, true, true);
    const auto collections = load_manifest(cfg, d);
    const auto samples = split_samples(collections, d, cfg);
    for (const auto& w : samples.warnings) std::cerr << "warning: " << w << "\n";
    const auto run = train_variant(samples, cfg, cfg.train.weights);

    const fs::path dir = variant_dir(cfg);
    fs::create_directories(dir);
    Checkpoint ckpt{run.report.best_params, run.report.attention, run.report.scaler};
    write_file_atomic(dir / "checkpoint.json", checkpoint_to_json(ckpt, cfg.hash(), cfg.seed));
    write_with_comment(dir / "train_log.csv", history_csv(run.report), cfg);
    json summary;
    summary["variant"] = variant_name(cfg.train.weights);
    summary["task_weights"] = cfg.train.weights.str();
    summary["best_step"] = run.report.best_step;
    summary["best_dev_rmse_fci"] = run.report.best_dev_rmse;
    summary["steps_run"] = run.report.steps_run;
    summary["stop_reason"] = std::string(to_string(run.report.stop_reason));
    summary["samples"] = {{"train", samples.train.size()}, {"dev", samples.dev.size()}, {"test", samples.test.size()}};
    summary["skipped_collections"] = samples.warnings.size();
    summary["meta"] = meta(cfg);
    write_file_atomic(dir / "train_summary.json", summary.dump(1) + "\n");
    std::cout << summary["variant"].get<std::string>() << ": best dev fci RMSE "
              << format_double(run.report.best_dev_rmse) << " at step " << run.report.best_step << " ("
              << to_string(run.report.stop_reason) << ")\n";
}

void print_per_country(const std::map<std::string, double>& pc) {
    for (const auto& [c, v] : pc) std::cout << c << '\t' << format_double(v) << '\n';
}

void cmd_evaluate(const RunConfig& cfg, bool per_country) {
    const PanelData d = load_panel(cfg, true, true);
    const auto ckpt = load_checkpoint(cfg);
    const auto collections = load_manifest(cfg, d);
    const auto samples = split_samples(collections, d, cfg);
    if (samples.test.empty()) throw Error("empty_split", "no test samples");
    const auto r = evaluate(ckpt.params, samples.test, ckpt.scaler, ckpt.attention);
    const std::string variant = variant_name(cfg.train.weights);
    write_file_atomic(variant_dir(cfg) / "eval.json", eval_json(r, cfg, variant));
    std::cout << variant << ": test fci RMSE " << format_double(r.rmse_fci) << " over " << r.samples << " samples\n";
    if (per_country) print_per_country(r.per_country);
}

void cmd_gist(const RunConfig& cfg, bool per_country) {
    const PanelData d = load_panel(cfg, true, false);
    const auto ckpt = load_checkpoint(cfg);
    const auto collections = load_manifest(cfg, d);
    const auto traces = test_traces(ckpt, collections, d, cfg);
    if (traces.empty()) throw Error("empty_split", "no test collections to explain");
    const auto population = score_population(traces, d.pools, cfg.gist_zero_centered);
    const fs::path dir = variant_dir(cfg);
    fs::create_directories(dir);
    const auto report = extract_gists(population, cfg.gist_fraction);
    write_with_comment(dir / "gists.tsv", gist_tsv(report), cfg);
    write_file_atomic(dir / "gists_summary.json", gist_summary_json(report, cfg.hash(), cfg.seed));
    if (per_country) {
        for (const auto& [country, r] : extract_gists_per_country(population, cfg.gist_fraction))
            write_with_comment(dir / ("gists_" + country + ".tsv"), gist_tsv(r), cfg);
    }
    std::cout << report.high.size() << " high and " << report.low.size() << " low gists from "
              << report.population_size << " sentences\n";
}

void cmd_topics(const RunConfig& cfg) {
    const auto corpus = load_corpus(require_path(cfg.paths.corpus, "corpus"));
    std::vector<TokenDoc> docs;
    docs.reserve(corpus.size());
    for (const auto& a : corpus) {
        TokenDoc doc;
        for (const auto& s : a.sentences)
            for (auto& t : preprocess(s)) doc.push_back(std::move(t));
        docs.push_back(std::move(doc));
    }
    const auto model = fit_lda(docs, cfg.lda);
    const fs::path dir = cfg.paths.out / "topics";
    fs::create_directories(dir);
    write_file_atomic(dir / "model.json", topic_model_json(model, cfg.hash(), cfg.seed));
    write_with_comment(dir / "topics.tsv", topic_summary_tsv(model), cfg);

    const fs::path gists = variant_dir(cfg) / "gists.tsv";
    if (fs::exists(gists)) {
        const auto report = parse_gist_tsv(read_file(gists));
        const auto [high, low] = profile_gists(report, model, cfg.lda_infer_iterations, cfg.lda.seed);
        write_with_comment(dir / ("profile_" + variant_name(cfg.train.weights) + ".tsv"), profile_tsv(high, low), cfg);
    }
    std::cout << model.K << " topics over " << model.vocab.size() << " terms\n";
}

void cmd_baseline(const RunConfig& cfg, bool per_country) {
    const auto corpus = load_corpus(require_path(cfg.paths.corpus, "corpus"));
    const auto labels = load_labels(require_path(cfg.paths.labels, "labels"));
    const auto traditional = load_traditional(require_path(cfg.paths.traditional, "traditional"));
    const auto keywords = KeywordConfig::parse(read_file(require_path(cfg.paths.keywords, "keywords")));
    const auto run = run_baseline(corpus, labels, traditional, keywords, cfg);

    const fs::path dir = cfg.paths.out / "baseline";
    fs::create_directories(dir);
    write_file_atomic(dir / "model.json", adl_model_json(run.model, cfg.hash(), cfg.seed));
    EvalResult r;
    r.rmse_fci = run.rmse_test;
    r.per_country = run.per_country;
    r.samples = run.test_rows;
    write_file_atomic(dir / "eval.json", eval_json(r, cfg, "baseline"));
    std::cout << "baseline: " << run.fit_rows << " fit rows, " << run.design.dropped.size()
              << " dropped, test fci RMSE " << format_double(run.rmse_test) << "\n";
    if (per_country) print_per_country(run.per_country);
}

void cmd_report(const RunConfig& cfg) {
    const std::vector<std::pair<std::string, std::string>> columns{{"baseline", "Baseline"},
                                                                   {"single", "Single Task"},
                                                                   {"double_price", "Double-task Price"},
                                                                   {"double_social", "Double-task Social"},
                                                                   {"triple", "Triple-task"}};
    std::map<std::string, json> evals;
    std::set<std::string> countries;
    for (const auto& [dir, title] : columns) {
        const fs::path p = cfg.paths.out / dir / "eval.json";
        if (!fs::exists(p)) continue;
        evals[dir] = json::parse(read_file(p));
        for (const auto& [c, v] : evals[dir]["per_country"].items()) countries.insert(c);
    }
    if (evals.empty()) throw Error("missing_input", "no eval.json found under " + cfg.paths.out.string());

    auto cell = [&](const std::string& dir, const std::string* country) -> std::string {
        const auto it = evals.find(dir);
        if (it == evals.end()) return "-";
        const json& j = it->second;
        if (!country) return format_double(std::round(j["rmse_fci"].get<double>() * 1000.0) / 1000.0);
        if (!j["per_country"].contains(*country)) return "-";
        return format_double(std::round(j["per_country"][*country].get<double>() * 1000.0) / 1000.0);
    };

    std::string tsv = "country";
    std::string md = "| Country |";
    for (const auto& [dir, title] : columns) {
        tsv += "\t" + title;
        md += " " + title + " |";
    }
    tsv += "\n";
    md += "\n|---|";
    for (std::size_t i = 0; i < columns.size(); ++i) md += "---|";
    md += "\n";
    auto add_row = [&](const std::string& label, const std::string* country) {
        tsv += label;
        md += "| " + label + " |";
        for (const auto& [dir, title] : columns) {
            const auto v = cell(dir, country);
            tsv += "\t" + v;
            md += " " + v + " |";
        }
        tsv += "\n";
        md += "\n";
    };
    for (const auto& c : countries) add_row(c, &c);
    add_row("Overall", nullptr);

    md = "# Test RMSE (fci units)\n\n" + md;
    for (const auto& [dir, title] : columns) {
        const fs::path g = cfg.paths.out / dir / "gists_summary.json";
        if (!fs::exists(g)) continue;
        const auto j = json::parse(read_file(g));
        md += "\n## Gists: " + title + "\n\n";
        md += "population " + std::to_string(j.value("population_size", 0)) + ", fraction " +
              format_double(j.value("fraction", 0.0)) + "\n";
        const fs::path tsv_path = cfg.paths.out / dir / "gists.tsv";
        if (fs::exists(tsv_path)) {
            const auto rep = parse_gist_tsv(read_file(tsv_path));
            for (const auto* side : {&rep.high, &rep.low}) {
                md += side == &rep.high ? "\nTop high:\n\n" : "\nTop low:\n\n";
                for (std::size_t i = 0; i < side->size() && i < 5; ++i)
                    md += "- " + (*side)[i].sentence.text + "\n";
            }
        }
    }
    const fs::path topics = cfg.paths.out / "topics" / "topics.tsv";
    if (fs::exists(topics)) {
        md += "\n## Topics (stemmed terms)\n\n```\n" + read_file(topics) + "```\n";
    }
    write_with_comment(cfg.paths.out / "report.tsv", tsv, cfg);
    write_file_atomic(cfg.paths.out / "report.md", "<!-- config_hash=" + cfg.hash() + " seed=" +
                                                       std::to_string(cfg.seed) + " -->\n" + md);
    std::cout << tsv;
}

void fail(const std::string& code, const std::string& message) {
    std::cerr << json{{"error", code}, {"message", message}}.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gistcast: food-crisis nowcasting from news embeddings"};
    app.require_subcommand(1);
    Flags flags;
    std::uint64_t seed_value = 0;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", flags.config, "run config JSON");
        sub->add_option("--seed", seed_value, "master seed (overrides the config)");
        sub->add_option("--out", flags.out, "output directory");
        sub->add_option("--task-weights", flags.task_weights, "task loss weights a,b,c");
        sub->add_option("--attention", flags.attention, "softmax or raw");
        sub->add_flag("--per-country", flags.per_country, "per-country output");
    };
    const std::vector<std::pair<std::string, std::string>> commands{
        {"interpolate", "monthly fci from quarterly IPC phases"},
        {"synth", "write a synthetic dataset"},
        {"bootstrap", "pseudo-collection manifest"},
        {"train", "train one task-weight variant"},
        {"evaluate", "test RMSE of a trained variant"},
        {"gist", "high and low gist sentences"},
        {"topics", "LDA topics and gist profiles"},
        {"baseline", "ADL baseline fit and test RMSE"},
        {"report", "per-country RMSE table and summaries"}};
    std::map<std::string, CLI::App*> subs;
    for (const auto& [name, help] : commands) {
        subs[name] = app.add_subcommand(name, help);
        add_common(subs[name]);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        fail("usage", e.what());
        return 1;
    }

    try {
        for (const auto& [name, sub] : subs)
            if (sub->parsed() && sub->count("--seed") > 0) flags.seed = seed_value;
        const RunConfig cfg = resolve_config(flags);
        const bool pc = flags.per_country;
        if (subs["interpolate"]->parsed()) cmd_interpolate(cfg);
        else if (subs["synth"]->parsed()) cmd_synth(cfg);
        else if (subs["bootstrap"]->parsed()) cmd_bootstrap(cfg);
        else if (subs["train"]->parsed()) cmd_train(cfg);
        else if (subs["evaluate"]->parsed()) cmd_evaluate(cfg, pc);
        else if (subs["gist"]->parsed()) cmd_gist(cfg, pc);
        else if (subs["topics"]->parsed()) cmd_topics(cfg);
        else if (subs["baseline"]->parsed()) cmd_baseline(cfg, pc);
        else if (subs["report"]->parsed()) cmd_report(cfg);
    } catch (const Error& e) {
        fail(e.code(), e.what());
        return 1;
    } catch (const fs::filesystem_error& e) {
        fail("io", e.what());
        return 1;
    } catch (const json::exception& e) {
        fail("parse", e.what());
        return 1;
    } catch (const std::exception& e) {
        fail("internal", e.what());
        return 1;
    }
    return 0;
}
