#include "gistcast/mtl_model.hpp"

#include "gistcast/common.hpp"

#include <cmath>

#include <json.hpp>

namespace gistcast {

using nlohmann::json;

std::string_view task_name(std::size_t task) {
    static constexpr std::array<std::string_view, kTasks> names{"fci", "price", "social"};
    return names.at(task);
}

std::string_view to_string(AttentionMode mode) { return mode == AttentionMode::Softmax ? "softmax" : "raw"; }

AttentionMode parse_attention_mode(std::string_view text) {
    if (text == "softmax") return AttentionMode::Softmax;
    if (text == "raw") return AttentionMode::Raw;
    throw Error("config", "attention mode must be softmax or raw, got '" + std::string(text) + "'");
}

std::size_t ModelParams::size() const {
    std::size_t n = static_cast<std::size_t>(shared_W.size() + shared_b.size() + attn_a.size()) + 1;
    for (const auto& h : heads) n += static_cast<std::size_t>(h.w.size()) + 1;
    return n;
}

std::vector<double> ModelParams::flatten() const {
    std::vector<double> out;
    out.reserve(size());
    for (Eigen::Index r = 0; r < shared_W.rows(); ++r)
        for (Eigen::Index c = 0; c < shared_W.cols(); ++c) out.push_back(shared_W(r, c));
    out.insert(out.end(), shared_b.data(), shared_b.data() + shared_b.size());
    out.insert(out.end(), attn_a.data(), attn_a.data() + attn_a.size());
    out.push_back(attn_b);
    for (const auto& h : heads) {
        out.insert(out.end(), h.w.data(), h.w.data() + h.w.size());
        out.push_back(h.b);
    }
    return out;
}

void ModelParams::assign(std::span<const double> flat) {
    if (flat.size() != size()) throw Error("shape", "parameter vector has wrong length");
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < shared_W.rows(); ++r)
        for (Eigen::Index c = 0; c < shared_W.cols(); ++c) shared_W(r, c) = flat[k++];
    for (Eigen::Index i = 0; i < shared_b.size(); ++i) shared_b[i] = flat[k++];
    for (Eigen::Index i = 0; i < attn_a.size(); ++i) attn_a[i] = flat[k++];
    attn_b = flat[k++];
    for (auto& h : heads) {
        for (Eigen::Index i = 0; i < h.w.size(); ++i) h.w[i] = flat[k++];
        h.b = flat[k++];
    }
}

ModelParams ModelParams::zeros_like() const {
    ModelParams g;
    g.shared = shared;
    g.shared_W = Eigen::MatrixXd::Zero(shared_W.rows(), shared_W.cols());
    g.shared_b = Eigen::VectorXd::Zero(shared_b.size());
    g.attn_a = Eigen::VectorXd::Zero(attn_a.size());
    for (std::size_t j = 0; j < kTasks; ++j) g.heads[j].w = Eigen::VectorXd::Zero(heads[j].w.size());
    return g;
}

bool ModelParams::all_finite() const {
    if (!shared_W.allFinite() || !shared_b.allFinite() || !attn_a.allFinite() || !std::isfinite(attn_b)) return false;
    for (const auto& h : heads)
        if (!h.w.allFinite() || !std::isfinite(h.b)) return false;
    return true;
}

void TaskWeights::validate() const {
    bool any = false;
    for (double l : lambda) {
        if (!(l >= 0.0) || !std::isfinite(l)) throw Error("config", "task weights must be finite and >= 0");
        any = any || l > 0.0;
    }
    if (!any) throw Error("config", "task weights must not all be zero");
}

TaskWeights TaskWeights::parse(std::string_view text) {
    const auto parts = split(text, ',');
    if (parts.size() != kTasks) throw Error("config", "task weights need 3 comma-separated values");
    TaskWeights w;
    for (std::size_t j = 0; j < kTasks; ++j) w.lambda[j] = parse_double(parts[j], "task weight");
    w.validate();
    return w;
}

std::string TaskWeights::str() const {
    return format_double(lambda[0]) + "," + format_double(lambda[1]) + "," + format_double(lambda[2]);
}

namespace {

void check_input(const Eigen::MatrixXd& E, const ModelParams& p) {
    if (E.rows() < 1) throw Error("shape", "collection has no articles");
    if (E.cols() != p.input_dim())
        throw Error("shape", "embedding dim " + std::to_string(E.cols()) + " does not match model input dim " +
                                 std::to_string(p.input_dim()));
    if (!E.allFinite()) throw Error("non_finite", "non-finite value in collection embedding");
}

}  // namespace

ForwardTrace forward(const Eigen::MatrixXd& E, const ModelParams& p, AttentionMode mode) {
    check_input(E, p);
    ForwardTrace t;
    if (p.shared) {
        t.z = ((E * p.shared_W.transpose()).rowwise() + p.shared_b.transpose()).array().tanh().matrix();
    } else {
        t.z = E;
    }
    t.raw_scores = (t.z * p.attn_a).array() + p.attn_b;
    if (mode == AttentionMode::Softmax) {
        const double mx = t.raw_scores.maxCoeff();
        t.attn_w = (t.raw_scores.array() - mx).exp().matrix();
        t.attn_w /= t.attn_w.sum();
    } else {
        t.attn_w = t.raw_scores;
    }
    t.h_A = t.z.transpose() * t.attn_w;
    for (std::size_t j = 0; j < kTasks; ++j) t.preds[j] = p.heads[j].w.dot(t.h_A) + p.heads[j].b;
    return t;
}

double loss(const Targets& preds, const Targets& labels, const TaskWeights& weights) {
    double total = 0.0;
    for (std::size_t j = 0; j < kTasks; ++j) {
        const double r = preds[j] - labels[j];
        total += weights.lambda[j] * r * r;
    }
    return total;
}

ModelParams backward(const Eigen::MatrixXd& E, const ModelParams& p, const ForwardTrace& t, const Targets& labels,
                     const TaskWeights& weights, AttentionMode mode) {
    ModelParams g = p.zeros_like();

    // Heads.
    Eigen::VectorXd d_hA = Eigen::VectorXd::Zero(t.h_A.size());
    for (std::size_t j = 0; j < kTasks; ++j) {
        const double dy = 2.0 * weights.lambda[j] * (t.preds[j] - labels[j]);
        g.heads[j].w = dy * t.h_A;
        g.heads[j].b = dy;
        d_hA += dy * p.heads[j].w;
    }

    // Pooling: h_A = z^T w.
    const Eigen::VectorXd d_w = t.z * d_hA;
    Eigen::MatrixXd d_z = t.attn_w * d_hA.transpose();

    // Attention normalization.
    Eigen::VectorXd d_s;
    if (mode == AttentionMode::Softmax) {
        const double mean = t.attn_w.dot(d_w);
        d_s = t.attn_w.array() * (d_w.array() - mean);
    } else {
        d_s = d_w;
    }

    // Scores: s = z a + b.
    g.attn_a = t.z.transpose() * d_s;
    g.attn_b = d_s.sum();
    d_z += d_s * p.attn_a.transpose();

    // Shared layer: z = tanh(E W^T + c).
    if (p.shared) {
        const Eigen::MatrixXd d_u = (d_z.array() * (1.0 - t.z.array().square())).matrix();
        g.shared_W = d_u.transpose() * E;
        g.shared_b = d_u.colwise().sum().transpose();
    }
    return g;
}

ModelParams backward(const Eigen::MatrixXd& E, const ModelParams& p, const Targets& labels,
                     const TaskWeights& weights, AttentionMode mode) {
    return backward(E, p, forward(E, p, mode), labels, weights, mode);
}

ModelParams init_params(int d, int d_h, bool shared, std::uint64_t seed) {
    if (d < 1 || (shared && d_h < 1)) throw Error("config", "model dimensions must be >= 1");
    Rng rng(seed);
    auto glorot = [&rng](Eigen::Index rows, Eigen::Index cols, int fan_in, int fan_out) {
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        Eigen::MatrixXd m(rows, cols);
        for (Eigen::Index r = 0; r < rows; ++r)
            for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng.uniform(-limit, limit);
        return m;
    };
    ModelParams p;
    p.shared = shared;
    const int hidden = shared ? d_h : d;
    if (shared) {
        p.shared_W = glorot(hidden, d, d, hidden);
        p.shared_b = Eigen::VectorXd::Zero(hidden);
    } else {
        p.shared_W.resize(0, 0);
        p.shared_b.resize(0);
    }
    p.attn_a = glorot(hidden, 1, hidden, 1).col(0);
    p.attn_b = 0.0;
    for (auto& h : p.heads) {
        h.w = glorot(hidden, 1, hidden, 1).col(0);
        h.b = 0.0;
    }
    return p;
}

TargetScaler TargetScaler::fit(std::span<const Targets> raw) {
    TargetScaler s;
    if (raw.empty()) return s;
    auto moments = [&raw](std::size_t j, double& mean, double& sd) {
        double sum = 0.0;
        for (const auto& t : raw) sum += t[j];
        mean = sum / static_cast<double>(raw.size());
        double ss = 0.0;
        for (const auto& t : raw) ss += (t[j] - mean) * (t[j] - mean);
        sd = std::sqrt(ss / static_cast<double>(raw.size()));
        if (!(sd > 1e-12)) sd = 1.0;
    };
    moments(1, s.price_mean, s.price_std);
    moments(2, s.social_mean, s.social_std);
    return s;
}

Targets TargetScaler::apply(const Targets& raw) const {
    return {raw[0], (raw[1] - price_mean) / price_std, (raw[2] - social_mean) / social_std};
}

Targets TargetScaler::invert(const Targets& scaled) const {
    return {scaled[0], scaled[1] * price_std + price_mean, scaled[2] * social_std + social_mean};
}

namespace {

json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd json_vec(const json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

std::string checkpoint_to_json(const Checkpoint& ckpt, std::string_view config_hash, std::uint64_t seed) {
    const auto& p = ckpt.params;
    json params;
    json W = json::array();
    for (Eigen::Index r = 0; r < p.shared_W.rows(); ++r) W.push_back(vec_json(p.shared_W.row(r).transpose()));
    params["shared_W"] = std::move(W);
    params["shared_b"] = vec_json(p.shared_b);
    params["attn_a"] = vec_json(p.attn_a);
    params["attn_b"] = p.attn_b;
    for (std::size_t j = 0; j < kTasks; ++j)
        params["heads"][std::string(task_name(j))] = {{"w", vec_json(p.heads[j].w)}, {"b", p.heads[j].b}};

    json out;
    out["version"] = 1;
    out["d"] = p.input_dim();
    out["d_h"] = p.hidden_dim();
    out["shared"] = p.shared;
    out["attention"] = std::string(to_string(ckpt.attention));
    out["params"] = std::move(params);
    out["target_scaler"] = {{"price", {ckpt.scaler.price_mean, ckpt.scaler.price_std}},
                            {"social", {ckpt.scaler.social_mean, ckpt.scaler.social_std}}};
    if (!config_hash.empty()) out["meta"] = {{"config_hash", std::string(config_hash)}, {"seed", seed}};
    return out.dump(1) + "\n";
}

Checkpoint checkpoint_from_json(std::string_view text) {
    try {
        const json j = json::parse(text);
        if (j.at("version").get<int>() != 1) throw Error("parse", "unsupported checkpoint version");
        Checkpoint c;
        auto& p = c.params;
        p.shared = j.at("shared").get<bool>();
        const int d = j.at("d").get<int>();
        const int d_h = j.at("d_h").get<int>();
        const json& params = j.at("params");
        if (p.shared) {
            const auto& rows = params.at("shared_W");
            p.shared_W.resize(d_h, d);
            if (static_cast<int>(rows.size()) != d_h) throw Error("shape", "shared_W row count");
            for (int r = 0; r < d_h; ++r) {
                const auto v = json_vec(rows[static_cast<std::size_t>(r)]);
                if (v.size() != d) throw Error("shape", "shared_W column count");
                p.shared_W.row(r) = v.transpose();
            }
            p.shared_b = json_vec(params.at("shared_b"));
        } else {
            p.shared_W.resize(0, 0);
            p.shared_b.resize(0);
        }
        p.attn_a = json_vec(params.at("attn_a"));
        p.attn_b = params.at("attn_b").get<double>();
        for (std::size_t t = 0; t < kTasks; ++t) {
            const auto& h = params.at("heads").at(std::string(task_name(t)));
            p.heads[t].w = json_vec(h.at("w"));
            p.heads[t].b = h.at("b").get<double>();
            if (p.heads[t].w.size() != d_h) throw Error("shape", "head width does not match d_h");
        }
        if (p.attn_a.size() != d_h || (p.shared && p.shared_b.size() != d_h) || (!p.shared && d != d_h))
            throw Error("shape", "inconsistent checkpoint dimensions");
        if (!p.all_finite()) throw Error("validation", "non-finite checkpoint parameter");
        if (j.contains("attention")) c.attention = parse_attention_mode(j.at("attention").get<std::string>());
        const auto& ts = j.at("target_scaler");
        c.scaler.price_mean = ts.at("price").at(0).get<double>();
        c.scaler.price_std = ts.at("price").at(1).get<double>();
        c.scaler.social_mean = ts.at("social").at(0).get<double>();
        c.scaler.social_std = ts.at("social").at(1).get<double>();
        return c;
    } catch (const json::exception& e) {
        throw Error("parse", std::string("checkpoint: ") + e.what());
    }
}

}  // namespace gistcast
