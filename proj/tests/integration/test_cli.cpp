// End-to-end runs of the gistcast binary on small synthetic data.

#include "gistcast/common.hpp"

#include "../unit/helpers.hpp"

#include <doctest.h>
#include <json.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

using namespace gistcast;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code = -1;
    std::string out, err;
};

Result run(const fs::path& dir, const std::string& args) {
    const auto o = dir / "stdout.txt", e = dir / "stderr.txt";
    const std::string cmd = std::string(GISTCAST_BIN) + " " + args + " >" + o.string() + " 2>" + e.string();
    const int status = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = read_file(o);
    r.err = read_file(e);
    return r;
}

std::string first_line(const fs::path& p) {
    const auto s = read_file(p);
    return s.substr(0, s.find('\n'));
}

// A workspace with a small synthetic dataset and a run config.
struct Workspace {
    fs::path dir;
    fs::path config;

    explicit Workspace(const std::string& name, const json& synth_patch = json::object(),
                       const json& run_patch = json::object()) {
        dir = testutil::temp_dir(name);
        auto synth = json::parse(R"({"seed": 5, "paths": {"out": "data"}, "synth": {"countries": 3, "months": 44,
            "articles_per_month": 3, "sentences_per_article": 4, "dim": 4}})");
        synth.merge_patch(synth_patch);
        auto cfg = json::parse(R"({"seed": 5, "paths": {"corpus": "data/corpus.jsonl",
            "embeddings": "data/embeddings.emb", "labels": "data/labels.csv", "traditional": "data/traditional.csv",
            "keywords": "data/keywords.txt", "out": "out"}, "bootstrap": {"m": 4, "n": 3, "K": 2},
            "model": {"d_h": 4}, "train": {"max_steps": 60, "batch_size": 16},
            "baseline": {"lambda": 1.0}, "lda": {"K": 2, "iterations": 30, "min_df": 1}, "gist": {"fraction": 0.05}})");
        cfg.merge_patch(run_patch);
        write_file_atomic(dir / "synth.json", synth.dump());
        write_file_atomic(dir / "run.json", cfg.dump());
        config = dir / "run.json";
        const auto r = run(dir, "synth --config " + (dir / "synth.json").string());
        REQUIRE_MESSAGE(r.code == 0, r.err);
    }

    Result cmd(const std::string& sub, const std::string& extra = "") const {
        return run(dir, sub + " --config " + config.string() + " " + extra);
    }
};

}  // namespace

TEST_CASE("full pipeline writes every declared output with metadata") {
    const Workspace w("cli_full");
    const auto out = w.dir / "out";
    for (const auto* sub : {"bootstrap"}) REQUIRE(w.cmd(sub).code == 0);
    for (const auto* tw : {"1,0,0", "1,1,1"}) {
        const auto r = w.cmd("train", std::string("--task-weights ") + tw);
        REQUIRE_MESSAGE(r.code == 0, r.err);
        REQUIRE(w.cmd("evaluate", std::string("--task-weights ") + tw + " --per-country").code == 0);
        REQUIRE(w.cmd("gist", std::string("--task-weights ") + tw + " --per-country").code == 0);
    }
    REQUIRE(w.cmd("topics").code == 0);
    REQUIRE(w.cmd("baseline").code == 0);
    const auto rep = w.cmd("report");
    REQUIRE_MESSAGE(rep.code == 0, rep.err);

    const auto bs = json::parse(read_file(out / "bootstrap.json"));
    CHECK(bs["collections"] == 3 * 44 * 2);
    CHECK(bs["pseudo_articles"] == 3 * 44 * 2 * 4);

    // The report mirrors the results table: one column per variant, "-" where absent.
    const auto tsv = read_file(out / "report.tsv");
    std::istringstream lines(tsv);
    std::string comment, header, line, overall;
    std::getline(lines, comment);
    std::getline(lines, header);
    CHECK(header == "country\tBaseline\tSingle Task\tDouble-task Price\tDouble-task Social\tTriple-task");
    int rows = 0;
    while (std::getline(lines, line)) {
        ++rows;
        overall = line;
    }
    CHECK(rows == 4);
    CHECK(overall.rfind("Overall\t", 0) == 0);
    CHECK(overall.find("\t-\t-\t") != std::string::npos);
    CHECK(overall.find("\t-\t-\t-") == std::string::npos);

    // The hash covers the effective config, so a --task-weights override gives the variant its own hash.
    const std::string hash = json::parse(read_file(out / "bootstrap.json"))["meta"]["config_hash"];
    const std::string single = json::parse(read_file(out / "single" / "train_summary.json"))["meta"]["config_hash"];
    CHECK(single != hash);
    const std::vector<std::pair<fs::path, std::string>> commented{
        {out / "single" / "train_log.csv", single},   {out / "single" / "gists_UG.tsv", single},
        {out / "triple" / "gists.tsv", hash},         {out / "topics" / "topics.tsv", hash},
        {out / "topics" / "profile_triple.tsv", hash}, {out / "report.tsv", hash}};
    for (const auto& [f, h] : commented) CHECK_MESSAGE(first_line(f) == "# config_hash=" + h + " seed=5", f.string());
    const std::vector<std::pair<fs::path, std::string>> with_meta{
        {out / "single" / "checkpoint.json", single},  {out / "single" / "eval.json", single},
        {out / "single" / "gists_summary.json", single}, {out / "triple" / "train_summary.json", hash},
        {out / "topics" / "model.json", hash},          {out / "baseline" / "model.json", hash},
        {out / "baseline" / "eval.json", hash},         {out / "manifest.jsonl.meta.json", hash}};
    for (const auto& [f, h] : with_meta) {
        const auto j = json::parse(read_file(f));
        const auto& m = j.contains("meta") ? j["meta"] : j;
        CHECK_MESSAGE(m["config_hash"] == h, f.string());
        CHECK(m["seed"] == 5);
    }
    CHECK(first_line(out / "report.md") == "<!-- config_hash=" + hash + " seed=5 -->");
    CHECK(fs::exists(w.dir / "data" / "embeddings.emb.meta.json"));
    CHECK(fs::exists(w.dir / "data" / "corpus.jsonl.meta.json"));
}

TEST_CASE("bootstrap and train are byte-identical on rerun") {
    const Workspace w("cli_det");
    for (const auto* o : {"a", "b"}) {
        const auto flag = "--out " + (w.dir / o).string();
        REQUIRE(w.cmd("bootstrap", flag).code == 0);
        REQUIRE(w.cmd("train", flag + " --task-weights 1,1,1").code == 0);
        REQUIRE(w.cmd("gist", flag + " --task-weights 1,1,1").code == 0);
    }
    for (const auto* f : {"manifest.jsonl", "manifest.jsonl.meta.json", "bootstrap.json", "triple/checkpoint.json",
                          "triple/train_log.csv", "triple/train_summary.json", "triple/gists.tsv"})
        CHECK_MESSAGE(read_file(w.dir / "a" / f) == read_file(w.dir / "b" / f), f);
    // A different seed moves the manifest.
    REQUIRE(w.cmd("bootstrap", "--seed 6 --out " + (w.dir / "c").string()).code == 0);
    CHECK(read_file(w.dir / "a" / "manifest.jsonl") != read_file(w.dir / "c" / "manifest.jsonl"));
}

TEST_CASE("thread count does not change training output") {
    const Workspace w("cli_threads");
    REQUIRE(w.cmd("bootstrap").code == 0);
    const auto cmd = std::string(GISTCAST_BIN) + " train --config " + w.config.string();
    for (const auto* t : {"1", "3"}) {
        const auto full = "GISTCAST_THREADS=" + std::string(t) + " " + cmd + " --out " + (w.dir / t).string() +
                          " >/dev/null 2>&1";
        REQUIRE(std::system(("cp -r " + (w.dir / "out").string() + " " + (w.dir / t).string()).c_str()) == 0);
        REQUIRE(std::system(full.c_str()) == 0);
    }
    CHECK(read_file(w.dir / "1" / "triple" / "checkpoint.json") == read_file(w.dir / "3" / "triple" / "checkpoint.json"));
}

TEST_CASE("evaluate reaches zero error on noiseless data") {
    const Workspace w("cli_noiseless", json::parse(R"({"synth": {"noise_sigma": 0.0, "signal_fraction": 1.0}})"),
                      json::parse(R"({"model": {"shared": false},
                                      "train": {"lr": 0.01, "max_steps": 20000, "batch_size": 32, "patience": 400}})"));
    REQUIRE(w.cmd("bootstrap").code == 0);
    REQUIRE(w.cmd("train", "--task-weights 1,0,0").code == 0);
    REQUIRE(w.cmd("evaluate", "--task-weights 1,0,0").code == 0);
    const auto j = json::parse(read_file(w.dir / "out" / "single" / "eval.json"));
    MESSAGE("noiseless test RMSE " << j["rmse_fci"].get<double>());
    CHECK(j["rmse_fci"].get<double>() <= 1e-6);
}

TEST_CASE("failures exit 1 with one JSON line and no partial outputs") {
    const Workspace w("cli_err");
    auto check_error = [](const Result& r, const std::string& code) {
        CHECK(r.code == 1);
        CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
        const auto j = json::parse(r.err);
        CHECK(j["error"] == code);
        CHECK(j["message"].is_string());
    };
    check_error(run(w.dir, "train --config " + (w.dir / "nope.json").string()), "io");
    check_error(run(w.dir, "bootstrap --bogus"), "usage");
    check_error(run(w.dir, "frobnicate"), "usage");
    check_error(w.cmd("train"), "missing_input");
    CHECK_FALSE(fs::exists(w.dir / "out" / "triple" / "checkpoint.json"));
    check_error(w.cmd("bootstrap", "--task-weights 0,0,0"), "config");
    check_error(w.cmd("train", "--attention hard"), "config");
    check_error(w.cmd("report"), "missing_input");
    write_file_atomic(w.dir / "bad.json", R"({"bootstrap": {"m": 0}})");
    check_error(run(w.dir, "bootstrap --config " + (w.dir / "bad.json").string()), "config");
}
