#pragma once

#include "gistcast/baseline.hpp"
#include "gistcast/embedding_store.hpp"
#include "gistcast/panel.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace gistcast {

struct SynthConfig {
    int countries = 9;
    int months = 44;
    int articles_per_month = 20;
    int sentences_per_article = 10;
    int dim = 16;
    double signal_fraction = 0.2;
    double noise_sigma = 0.3;
    double task_correlation = 0.8;
    std::uint64_t seed = 0;
    YearMonth start{2017, 1};
    int words_per_sentence = 8;
    /// Label month = text month + lead.
    int lead = 1;

    void validate() const;
};

struct SynthTruth {
    Eigen::VectorXd signal_direction;                  // unit norm
    std::set<std::string> informative_ids;             // sentence ids
    std::map<CountryMonthKey, double> true_latent;     // text month -> u
};

struct SynthData {
    std::vector<CorpusArticle> corpus;
    EmbeddingTable table;
    std::vector<LabelRow> labels;
    std::vector<TraditionalRow> traditional;
    KeywordConfig keywords;
    SynthTruth truth;
};

/// Word sets for u >= 0 and u < 0; disjoint from each other and from the
/// background words.
const std::vector<std::string>& synth_topic_words(int topic);
const std::vector<std::string>& synth_background_words();
std::string synth_country_code(int index);

SynthData generate(const SynthConfig& cfg);

std::string truth_json(const SynthTruth& truth);
/// corpus.jsonl, embeddings.emb (+ ids sidecar), labels.csv, traditional.csv,
/// keywords.txt, truth.json
void write_synth(const SynthData& data, const std::filesystem::path& dir);

}  // namespace gistcast
