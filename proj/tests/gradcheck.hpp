#pragma once

// Central finite-difference check of the model's analytic gradient.

#include "gistcast/common.hpp"
#include "gistcast/mtl_model.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace testutil {

struct GradInstance {
    Eigen::MatrixXd E;
    gistcast::ModelParams params;
    gistcast::Targets labels{};
    gistcast::TaskWeights weights;
    gistcast::AttentionMode mode = gistcast::AttentionMode::Softmax;
};

/// d <= 8, d_h <= 8, m <= 6, unit-scale parameters, random mode and shared
/// flag, occasionally masked tasks.
inline GradInstance random_instance(std::uint64_t seed) {
    gistcast::Rng rng(seed);
    GradInstance g;
    const int d = 1 + static_cast<int>(rng.below(8));
    const int d_h = 1 + static_cast<int>(rng.below(8));
    const int m = 1 + static_cast<int>(rng.below(6));
    const bool shared = rng.below(2) == 0;
    g.mode = rng.below(2) == 0 ? gistcast::AttentionMode::Softmax : gistcast::AttentionMode::Raw;
    g.params = gistcast::init_params(d, d_h, shared, seed);
    auto flat = g.params.flatten();
    for (auto& v : flat) v = rng.uniform(-1.0, 1.0);
    g.params.assign(flat);
    g.E.resize(m, d);
    for (int i = 0; i < m; ++i)
        for (int k = 0; k < d; ++k) g.E(i, k) = rng.normal();
    for (auto& y : g.labels) y = 2.0 * rng.normal();
    for (auto& l : g.weights.lambda) l = rng.below(4) == 0 ? 0.0 : rng.uniform(0.1, 2.0);
    if (g.weights.lambda[0] + g.weights.lambda[1] + g.weights.lambda[2] == 0.0) g.weights.lambda[0] = 1.0;
    return g;
}

struct GradCheckResult {
    double max_rel = 0.0;
    double max_abs = 0.0;
    std::size_t coords = 0;
};

/// Relative error per coordinate is |a - f| / max(|a|, |f|, floor).
inline GradCheckResult check_gradient(const GradInstance& g, double step = 1e-5, double floor = 1e-3) {
    using namespace gistcast;
    const auto analytic = backward(g.E, g.params, g.labels, g.weights, g.mode).flatten();
    auto theta = g.params.flatten();
    ModelParams probe = g.params;
    auto f = [&](const std::vector<double>& t) {
        probe.assign(t);
        return loss(forward(g.E, probe, g.mode).preds, g.labels, g.weights);
    };
    GradCheckResult r;
    r.coords = theta.size();
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const double orig = theta[i];
        theta[i] = orig + step;
        const double up = f(theta);
        theta[i] = orig - step;
        const double down = f(theta);
        theta[i] = orig;
        const double fd = (up - down) / (2.0 * step);
        const double diff = std::abs(analytic[i] - fd);
        r.max_abs = std::max(r.max_abs, diff);
        r.max_rel = std::max(r.max_rel, diff / std::max({std::abs(analytic[i]), std::abs(fd), floor}));
    }
    return r;
}

}  // namespace testutil
