#pragma once

#include "gistcast/baseline.hpp"
#include "gistcast/bootstrap.hpp"
#include "gistcast/embedding_store.hpp"
#include "gistcast/gist.hpp"
#include "gistcast/panel.hpp"
#include "gistcast/synthgen.hpp"
#include "gistcast/topics.hpp"
#include "gistcast/trainer.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace gistcast {

namespace fs = std::filesystem;

struct RunConfig {
    struct Paths {
        fs::path corpus, embeddings, labels, traditional, keywords, ipc;
        fs::path out = "out";
    } paths;
    std::uint64_t seed = 0;
    BootstrapParams bootstrap;
    ModelConfig model;
    TrainConfig train;
    int lead = 1;
    double gist_fraction = 0.05;
    bool gist_zero_centered = true;
    LdaConfig lda;
    int lda_infer_iterations = 100;
    SplitBoundaries splits;
    double ridge_lambda = 1e-3;
    LagSpec lags;
    bool country_dummies = false;
    SynthConfig synth;

    /// Copies `seed` into every component seed.
    void set_seed(std::uint64_t s);
    void validate() const;

    nlohmann::json to_json() const;
    /// Relative paths resolve against base_dir.
    static RunConfig from_json(const nlohmann::json& j, const fs::path& base_dir);
    static RunConfig load(const fs::path& path);
    /// Hash of the canonical config JSON, 16 hex digits.
    std::string hash() const;
};

/// "# config_hash=<h> seed=<s>" comment line for CSV/TSV outputs.
std::string meta_comment(const RunConfig& cfg);
/// Sidecar "<file>.meta.json" for outputs without a comment syntax.
void write_meta_sidecar(const fs::path& file, const RunConfig& cfg);
void write_with_comment(const fs::path& file, const std::string& body, const RunConfig& cfg);

/// "single", "double_price", "double_social", "triple", otherwise
/// "weights_<a>_<b>_<c>".
std::string variant_name(const TaskWeights& w);

struct PanelData {
    std::vector<CorpusArticle> corpus;
    std::map<CountryMonthKey, SentencePool> pools;
    EmbeddingTable table;
    std::vector<LabelRow> labels;
};

struct SplitSamples {
    std::vector<PanelSample> train, dev, test;
    SplitAssignment assignment;
    std::vector<std::string> warnings;
};

/// Samples are split by the month of their text.
SplitSamples split_samples(const std::vector<PseudoCollection>& collections, const PanelData& data,
                           const RunConfig& cfg);

struct VariantRun {
    TrainReport report;
    EvalResult dev;
    EvalResult test;
};

VariantRun train_variant(const SplitSamples& samples, const RunConfig& cfg, const TaskWeights& weights);

struct BaselineRun {
    AdlModel model;
    Design design;
    double rmse_test = 0.0;
    std::map<std::string, double> per_country;
    std::size_t fit_rows = 0;
    std::size_t test_rows = 0;
};

/// Fits on rows whose issue month (target month - lead) is in train or dev
/// and scores rows in test, matching the model's test targets.
BaselineRun run_baseline(const std::vector<CorpusArticle>& corpus, const std::vector<LabelRow>& labels,
                         const std::vector<TraditionalRow>& traditional, const KeywordConfig& keywords,
                         const RunConfig& cfg);

/// Attention traces of every test collection under a checkpoint.
std::vector<CollectionTrace> test_traces(const Checkpoint& ckpt, const std::vector<PseudoCollection>& collections,
                                         const PanelData& data, const RunConfig& cfg);

std::string eval_json(const EvalResult& r, const RunConfig& cfg, const std::string& variant);

}  // namespace gistcast
