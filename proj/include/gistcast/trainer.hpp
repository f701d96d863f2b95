#pragma once

#include "gistcast/bootstrap.hpp"
#include "gistcast/embedding_store.hpp"
#include "gistcast/mtl_model.hpp"
#include "gistcast/panel.hpp"

#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace gistcast {

/// One (country, month, fold) training unit: the pseudo-collection embedding
/// of month t and the targets observed at month t + lead, in original units.
struct PanelSample {
    CountryMonthKey key;
    int fold = 0;
    Eigen::MatrixXd embedding;  // m x d
    Targets targets{};
};

struct SampleSet {
    std::vector<PanelSample> samples;
    std::vector<std::string> warnings;  // one line per skipped collection
};

/// Joins collections with their labels at key.month + lead. Collections whose
/// label row is missing or lacks price/social targets are skipped with a warning.
SampleSet build_samples(const std::vector<PseudoCollection>& collections,
                        const std::map<CountryMonthKey, SentencePool>& pools, const EmbeddingTable& table,
                        const std::vector<LabelRow>& labels, int lead = 1);

struct ModelConfig {
    int d_h = 128;
    bool shared = true;
    AttentionMode attention = AttentionMode::Softmax;
};

struct TrainConfig {
    double lr = 1e-3;
    int batch_size = 32;
    int eval_every = 5;
    int patience = 10;
    int max_steps = 10000;
    std::uint64_t seed = 0;
    TaskWeights weights;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    void validate() const;
};

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    long long step = 0;
};

/// One Adam update with bias correction on a flat parameter vector.
void adam_update(std::span<double> params, std::span<const double> grads, AdamState& state, const TrainConfig& cfg);
void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, const TrainConfig& cfg);

/// Strict-improvement early stopping: stops once `patience` consecutive
/// observations fail to beat the best value so far.
class EarlyStopping {
public:
    explicit EarlyStopping(int patience) : patience_(patience) {}

    /// Returns true when the value is a new best.
    bool observe(double value);
    bool should_stop() const { return misses_ >= patience_; }
    double best() const { return best_; }

private:
    int patience_;
    int misses_ = 0;
    double best_ = std::numeric_limits<double>::infinity();
};

enum class StopReason { Patience, MaxSteps };
std::string_view to_string(StopReason r);

struct HistoryEntry {
    int step = 0;
    double dev_rmse_fci = 0.0;
};

struct TrainReport {
    ModelParams best_params;
    int best_step = 0;
    double best_dev_rmse = 0.0;
    std::vector<HistoryEntry> history;
    StopReason stop_reason = StopReason::MaxSteps;
    int steps_run = 0;
    TargetScaler scaler;
    AttentionMode attention = AttentionMode::Softmax;
};

TrainReport train(const std::vector<PanelSample>& train_set, const std::vector<PanelSample>& dev_set,
                  const ModelConfig& model, const TrainConfig& cfg);

struct EvalResult {
    double rmse_fci = 0.0;                    // fci units
    std::map<std::string, double> per_country;  // fci units
    double rmse_price = 0.0;                  // z-scored units
    double rmse_social = 0.0;                 // z-scored units
    std::size_t samples = 0;
};

double rmse(std::span<const double> errors);

EvalResult evaluate(const ModelParams& params, const std::vector<PanelSample>& dataset, const TargetScaler& scaler,
                    AttentionMode mode = AttentionMode::Softmax);

/// Training log CSV "step,dev_rmse_fci".
std::string history_csv(const TrainReport& report);

}  // namespace gistcast
