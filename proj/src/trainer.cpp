#include "gistcast/trainer.hpp"

#include "gistcast/common.hpp"

#include <cmath>
#include <numeric>

namespace gistcast {

SampleSet build_samples(const std::vector<PseudoCollection>& collections,
                        const std::map<CountryMonthKey, SentencePool>& pools, const EmbeddingTable& table,
                        const std::vector<LabelRow>& labels, int lead) {
    std::map<CountryMonthKey, const LabelRow*> by_key;
    for (const auto& r : labels) by_key[r.key] = &r;

    std::map<CountryMonthKey, std::vector<std::size_t>> resolved;
    SampleSet out;
    std::vector<const PseudoCollection*> usable;
    std::vector<Targets> targets;
    for (const auto& c : collections) {
        const CountryMonthKey target_key{c.key.country, c.key.month.plus(lead)};
        const auto it = by_key.find(target_key);
        if (it == by_key.end()) {
            out.warnings.push_back("skip " + c.key.str() + " fold " + std::to_string(c.fold) + ": no label for " +
                                   target_key.str());
            continue;
        }
        if (!it->second->complete()) {
            out.warnings.push_back("skip " + c.key.str() + " fold " + std::to_string(c.fold) +
                                   ": missing food_price/social_events for " + target_key.str());
            continue;
        }
        if (!resolved.count(c.key)) resolved.emplace(c.key, resolve_pool(pools.at(c.key), table));
        usable.push_back(&c);
        targets.push_back({it->second->fci, *it->second->food_price, *it->second->social_events});
    }
    out.samples.resize(usable.size());
    parallel_for(usable.size(), [&](std::size_t i) {
        const auto& c = *usable[i];
        auto emb = embed_collection(c, resolved.at(c.key), table);
        out.samples[i] = PanelSample{c.key, c.fold, std::move(emb.matrix), targets[i]};
    });
    return out;
}

void TrainConfig::validate() const {
    if (!(lr > 0.0)) throw Error("config", "lr must be > 0");
    if (batch_size < 1) throw Error("config", "batch_size must be >= 1");
    if (eval_every < 1) throw Error("config", "eval_every must be >= 1");
    if (patience < 1) throw Error("config", "patience must be >= 1");
    if (max_steps < 1) throw Error("config", "max_steps must be >= 1");
    weights.validate();
}

void adam_update(std::span<double> params, std::span<const double> grads, AdamState& state, const TrainConfig& cfg) {
    if (grads.size() != params.size()) throw Error("shape", "gradient/parameter length mismatch");
    if (state.m.empty()) {
        state.m.assign(params.size(), 0.0);
        state.v.assign(params.size(), 0.0);
    }
    if (state.m.size() != params.size()) throw Error("shape", "optimizer state length mismatch");
    ++state.step;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grads[i];
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grads[i] * grads[i];
        const double m_hat = state.m[i] / c1;
        const double v_hat = state.v[i] / c2;
        params[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
}

void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, const TrainConfig& cfg) {
    auto flat = params.flatten();
    const auto g = grads.flatten();
    adam_update(flat, g, state, cfg);
    params.assign(flat);
}

bool EarlyStopping::observe(double value) {
    if (value < best_) {
        best_ = value;
        misses_ = 0;
        return true;
    }
    ++misses_;
    return false;
}

std::string_view to_string(StopReason r) { return r == StopReason::Patience ? "patience" : "max_steps"; }

double rmse(std::span<const double> errors) {
    if (errors.empty()) return 0.0;
    double ss = 0.0;
    for (double e : errors) ss += e * e;
    return std::sqrt(ss / static_cast<double>(errors.size()));
}

EvalResult evaluate(const ModelParams& params, const std::vector<PanelSample>& dataset, const TargetScaler& scaler,
                    AttentionMode mode) {
    EvalResult out;
    out.samples = dataset.size();
    if (dataset.empty()) return out;
    std::vector<Targets> preds(dataset.size());
    parallel_for(dataset.size(), [&](std::size_t i) { preds[i] = forward(dataset[i].embedding, params, mode).preds; });

    std::vector<double> e_fci, e_price, e_social;
    std::map<std::string, std::vector<double>> by_country;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const Targets y = scaler.apply(dataset[i].targets);
        e_fci.push_back(preds[i][0] - y[0]);
        e_price.push_back(preds[i][1] - y[1]);
        e_social.push_back(preds[i][2] - y[2]);
        by_country[dataset[i].key.country].push_back(preds[i][0] - y[0]);
    }
    out.rmse_fci = rmse(e_fci);
    out.rmse_price = rmse(e_price);
    out.rmse_social = rmse(e_social);
    for (const auto& [c, e] : by_country) out.per_country[c] = rmse(e);
    return out;
}

TrainReport train(const std::vector<PanelSample>& train_set, const std::vector<PanelSample>& dev_set,
                  const ModelConfig& model, const TrainConfig& cfg) {
    cfg.validate();
    if (train_set.empty()) throw Error("validation", "empty training set");
    if (dev_set.empty()) throw Error("validation", "empty dev set");
    const auto d = static_cast<int>(train_set.front().embedding.cols());
    for (const auto* set : {&train_set, &dev_set})
        for (const auto& s : *set)
            if (s.embedding.cols() != d) throw Error("shape", "inconsistent embedding dims in dataset");

    TrainReport report;
    report.attention = model.attention;
    std::vector<Targets> raw;
    raw.reserve(train_set.size());
    for (const auto& s : train_set) raw.push_back(s.targets);
    report.scaler = TargetScaler::fit(raw);
    std::vector<Targets> scaled;
    scaled.reserve(raw.size());
    for (const auto& t : raw) scaled.push_back(report.scaler.apply(t));

    ModelParams params = init_params(d, model.d_h, model.shared, cfg.seed);
    report.best_params = params;
    AdamState adam;
    EarlyStopping stopper(cfg.patience);
    Rng shuffle_rng(hash_combine(cfg.seed, 0x5348554646ULL));

    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::size_t pos = order.size();
    const auto batch_cap = static_cast<std::size_t>(cfg.batch_size);
    const std::size_t n_params = params.size();

    auto run_eval = [&](int step) {
        const double dev_rmse = evaluate(params, dev_set, report.scaler, model.attention).rmse_fci;
        if (!std::isfinite(dev_rmse)) throw Error("diverged", "diverged at step " + std::to_string(step));
        report.history.push_back({step, dev_rmse});
        if (stopper.observe(dev_rmse)) {
            report.best_params = params;
            report.best_step = step;
            report.best_dev_rmse = dev_rmse;
        }
    };

    int step = 0;
    report.stop_reason = StopReason::MaxSteps;
    while (step < cfg.max_steps) {
        if (pos >= order.size()) {
            shuffle_rng.shuffle(order);
            pos = 0;
        }
        const std::size_t end = std::min(pos + batch_cap, order.size());
        const std::size_t bs = end - pos;

        std::vector<std::vector<double>> grads(bs);
        std::vector<double> losses(bs);
        parallel_for(bs, [&](std::size_t b) {
            const auto idx = order[pos + b];
            const auto& s = train_set[idx];
            const auto trace = forward(s.embedding, params, model.attention);
            losses[b] = loss(trace.preds, scaled[idx], cfg.weights);
            grads[b] = backward(s.embedding, params, trace, scaled[idx], cfg.weights, model.attention).flatten();
        });
        pos = end;

        // Canonical-order reduction keeps runs bit-identical across thread counts.
        std::vector<double> g(n_params, 0.0);
        double batch_loss = 0.0;
        for (std::size_t b = 0; b < bs; ++b) {
            batch_loss += losses[b];
            for (std::size_t k = 0; k < n_params; ++k) g[k] += grads[b][k];
        }
        const double inv = 1.0 / static_cast<double>(bs);
        batch_loss *= inv;
        for (double& x : g) x *= inv;

        ++step;
        if (!std::isfinite(batch_loss)) throw Error("diverged", "diverged at step " + std::to_string(step));

        auto flat = params.flatten();
        adam_update(flat, g, adam, cfg);
        params.assign(flat);
        if (!params.all_finite()) throw Error("diverged", "diverged at step " + std::to_string(step));

        if (step % cfg.eval_every == 0) {
            run_eval(step);
            if (stopper.should_stop()) {
                report.stop_reason = StopReason::Patience;
                break;
            }
        }
    }
    if (report.history.empty()) run_eval(step);
    report.steps_run = step;
    return report;
}

std::string history_csv(const TrainReport& report) {
    std::string out = "step,dev_rmse_fci\n";
    for (const auto& h : report.history) out += std::to_string(h.step) + "," + format_double(h.dev_rmse_fci) + "\n";
    return out;
}

}  // namespace gistcast
