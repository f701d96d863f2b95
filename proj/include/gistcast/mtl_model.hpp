#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace gistcast {

inline constexpr std::size_t kTasks = 3;
enum class Task : std::size_t { Fci = 0, Price = 1, Social = 2 };
std::string_view task_name(std::size_t task);

using Targets = std::array<double, kTasks>;

/// How raw attention scores become pooling weights. Softmax normalizes over
/// the m articles of a collection; Raw uses the linear scores directly.
enum class AttentionMode { Softmax, Raw };
std::string_view to_string(AttentionMode mode);
AttentionMode parse_attention_mode(std::string_view text);

struct TaskHead {
    Eigen::VectorXd w;
    double b = 0.0;
};

/// Parameters of the multi-task attention network.
///
///   z_i   = tanh(W h_i + c)          (identity when the shared layer is off)
///   s_i   = a . z_i + b
///   w     = softmax(s)  or  s        (AttentionMode)
///   h_A   = sum_i w_i z_i
///   y_j   = u_j . h_A + v_j          for j in {fci, price, social}
///
/// W is stored d_h x d so the shared map is a plain matrix-vector product.
struct ModelParams {
    bool shared = true;
    Eigen::MatrixXd shared_W;
    Eigen::VectorXd shared_b;
    Eigen::VectorXd attn_a;
    double attn_b = 0.0;
    std::array<TaskHead, kTasks> heads;

    Eigen::Index input_dim() const { return shared ? shared_W.cols() : attn_a.size(); }
    Eigen::Index hidden_dim() const { return attn_a.size(); }

    /// Number of scalar parameters.
    std::size_t size() const;
    /// Canonical flat order: W (row-major), c, a, b, then each head's w and b.
    std::vector<double> flatten() const;
    void assign(std::span<const double> flat);
    ModelParams zeros_like() const;
    bool all_finite() const;
};

struct TaskWeights {
    Targets lambda{1.0, 1.0, 1.0};

    /// Throws unless every entry is >= 0 and at least one is > 0.
    void validate() const;
    /// Parses "a,b,c".
    static TaskWeights parse(std::string_view text);
    std::string str() const;
};

struct ForwardTrace {
    Eigen::MatrixXd z;           // m x d_h
    Eigen::VectorXd raw_scores;  // m
    Eigen::VectorXd attn_w;      // m
    Eigen::VectorXd h_A;         // d_h
    Targets preds{};
};

/// E is m x d (one pseudo-article embedding per row).
ForwardTrace forward(const Eigen::MatrixXd& E, const ModelParams& p, AttentionMode mode = AttentionMode::Softmax);

/// sum_j lambda_j (pred_j - label_j)^2
double loss(const Targets& preds, const Targets& labels, const TaskWeights& weights);

/// dL/dp for one sample, by reverse accumulation through heads, pooling,
/// attention normalization, scores, and the shared layer.
ModelParams backward(const Eigen::MatrixXd& E, const ModelParams& p, const Targets& labels,
                     const TaskWeights& weights, AttentionMode mode = AttentionMode::Softmax);
ModelParams backward(const Eigen::MatrixXd& E, const ModelParams& p, const ForwardTrace& trace,
                     const Targets& labels, const TaskWeights& weights, AttentionMode mode);

/// Glorot-uniform weights, zero biases. With shared == false, d_h is ignored
/// and the hidden width equals d.
ModelParams init_params(int d, int d_h, bool shared, std::uint64_t seed);

/// z-scoring for the price and social targets, fit on the training split.
/// fci passes through unchanged.
struct TargetScaler {
    double price_mean = 0.0, price_std = 1.0;
    double social_mean = 0.0, social_std = 1.0;

    static TargetScaler fit(std::span<const Targets> raw);
    Targets apply(const Targets& raw) const;
    Targets invert(const Targets& scaled) const;
};

struct Checkpoint {
    ModelParams params;
    AttentionMode attention = AttentionMode::Softmax;
    TargetScaler scaler;
};

std::string checkpoint_to_json(const Checkpoint& ckpt, std::string_view config_hash = {}, std::uint64_t seed = 0);
Checkpoint checkpoint_from_json(std::string_view text);

}  // namespace gistcast
