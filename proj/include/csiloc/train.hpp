#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "csiloc/common.hpp"
#include "csiloc/nn.hpp"

namespace csiloc {

struct LabeledTensor {
    Tensor3 x;
    std::array<double, 2> label{0.0, 0.0};  // position, meters
};

struct StageSpec {
    std::size_t batch_size = 32;
    std::size_t epochs = 30;
};

struct TrainSchedule {
    std::vector<StageSpec> stages;
    double learning_rate = 1e-3;
    std::string optimizer = "adam";

    // Batch size starts at 32 and steps to 128, 256 and 1024, each stage 30
    // epochs. half_epochs is the desk-scale variant with 15 per stage.
    static TrainSchedule staged(bool half_epochs = false) {
        TrainSchedule s;
        const std::size_t e = half_epochs ? 15 : 30;
        s.stages = {{32, e}, {128, e}, {256, e}, {1024, e}};
        return s;
    }

    std::size_t total_epochs() const {
        std::size_t n = 0;
        for (const auto& st : stages) n += st.epochs;
        return n;
    }

    // Batch size in effect for each epoch, in order.
    std::vector<std::size_t> epoch_batch_sizes() const {
        std::vector<std::size_t> out;
        for (const auto& st : stages)
            out.insert(out.end(), st.epochs, st.batch_size);
        return out;
    }

    void validate() const {
        if (stages.empty()) throw std::invalid_argument("schedule needs at least one stage");
        for (const auto& st : stages)
            if (st.batch_size == 0 || st.epochs == 0)
                throw std::invalid_argument("stage batch size and epochs must be positive");
        if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
        if (optimizer != "adam") throw std::invalid_argument("unknown optimizer: " + optimizer);
    }
};

// Per-plane-index min/max over the training set, frozen once fitted.
struct NormStats {
    struct PlaneStat {
        PlaneSemantic semantic = PlaneSemantic::magnitude;
        double min = 0.0;
        double max = 1.0;
    };
    std::vector<PlaneStat> planes;
};

inline NormStats normalize_fit(const std::vector<LabeledTensor>& train_set,
                               const std::vector<PlaneSemantic>& semantics) {
    if (train_set.empty()) throw std::invalid_argument("normalize_fit: empty training set");
    const std::size_t n_planes = train_set[0].x.channels;
    if (semantics.size() != n_planes)
        throw std::invalid_argument("normalize_fit: semantics count mismatch");

    NormStats stats;
    stats.planes.resize(n_planes);
    for (std::size_t c = 0; c < n_planes; ++c) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (const auto& s : train_set) {
            if (s.x.channels != n_planes)
                throw std::invalid_argument("normalize_fit: inconsistent plane count");
            const std::size_t plane_size = s.x.rows * s.x.cols;
            const double* p = s.x.v.data() + c * plane_size;
            for (std::size_t i = 0; i < plane_size; ++i) {
                lo = std::min(lo, p[i]);
                hi = std::max(hi, p[i]);
            }
        }
        if (lo == hi)
            throw std::invalid_argument("normalize_fit: constant plane " +
                                        std::to_string(c) + " (min == max)");
        stats.planes[c] = {semantics[c], lo, hi};
    }
    return stats;
}

// x -> (x - min) / (max - min). Values outside the training range map outside
// [0, 1] and are not clipped.
inline void normalize_apply(const NormStats& stats, Tensor3& t) {
    if (t.channels != stats.planes.size())
        throw std::invalid_argument("normalize_apply: plane count mismatch");
    const std::size_t plane_size = t.rows * t.cols;
    for (std::size_t c = 0; c < t.channels; ++c) {
        const double lo = stats.planes[c].min;
        const double range = stats.planes[c].max - lo;
        double* p = t.v.data() + c * plane_size;
        // divide rather than multiply by the reciprocal so the training
        // extrema land exactly on 0 and 1
        for (std::size_t i = 0; i < plane_size; ++i) p[i] = (p[i] - lo) / range;
    }
}

inline void normalize_apply(const NormStats& stats, std::vector<LabeledTensor>& set) {
    for (auto& s : set) normalize_apply(stats, s.x);
}

struct TrainState {
    NetworkConfig config;
    std::vector<double> params;
    std::vector<double> adam_m;
    std::vector<double> adam_v;
    std::size_t adam_step = 0;
    std::size_t epochs_done = 0;
    std::uint64_t seed = 0;
    NormStats norm;
};

// Uniform fan-in-scaled weight init (U(-1/sqrt(fan_in), 1/sqrt(fan_in))),
// biases zero.
inline std::vector<double> init_params(const NetworkConfig& cfg, const Layout& lay,
                                       std::uint64_t seed) {
    std::vector<double> params(lay.param_count, 0.0);
    Rng rng(mix64(seed) ^ 0x77f1a2b3c4d5e6ull);
    for (std::size_t i = 0; i < lay.conv.size(); ++i) {
        const auto& st = lay.conv[i];
        const double fan_in = static_cast<double>(st.in.channels * cfg.conv[i].kernel_rows *
                                                  cfg.conv[i].kernel_cols);
        const double bound = 1.0 / std::sqrt(fan_in);
        for (std::size_t p = st.weight_offset; p < st.bias_offset; ++p)
            params[p] = rng.uniform(-bound, bound);
    }
    for (const auto& ds : lay.dense) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(ds.in));
        for (std::size_t p = ds.weight_offset; p < ds.bias_offset; ++p)
            params[p] = rng.uniform(-bound, bound);
    }
    return params;
}

namespace detail {

// Gradient accumulation uses a fixed number of stripes regardless of the
// machine: each stripe sums its contiguous sample range in order, stripes
// are then reduced in stripe order. The summation tree is therefore
// machine-independent, whether stripes run on threads or inline.
inline constexpr std::size_t grad_stripes = 8;

struct BatchResult {
    double loss_sum = 0.0;
};

template <typename Sample>
BatchResult batch_gradient(const NetworkConfig& cfg, const Layout& lay,
                           std::span<const double> params,
                           const std::vector<const Sample*>& batch, std::span<double> grad) {
    const std::size_t n = batch.size();
    const std::size_t chunk = (n + grad_stripes - 1) / grad_stripes;

    std::vector<std::vector<double>> stripe_grad(grad_stripes);
    std::array<double, grad_stripes> stripe_loss{};

    auto run_stripe = [&](std::size_t s) {
        const std::size_t lo = s * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) return;
        stripe_grad[s].assign(lay.param_count, 0.0);
        Workspace ws;
        double loss = 0.0;
        for (std::size_t i = lo; i < hi; ++i) {
            const auto pred = forward(cfg, lay, params, batch[i]->x, ws);
            loss += euclidean_loss(pred, batch[i]->label);
            backward(cfg, lay, params, ws, batch[i]->label, stripe_grad[s]);
        }
        stripe_loss[s] = loss;
    };

    const unsigned hw = std::thread::hardware_concurrency();
    if (hw > 1 && n > 1) {
        std::vector<std::thread> threads;
        threads.reserve(grad_stripes);
        for (std::size_t s = 0; s < grad_stripes; ++s)
            threads.emplace_back(run_stripe, s);
        for (auto& t : threads) t.join();
    } else {
        for (std::size_t s = 0; s < grad_stripes; ++s) run_stripe(s);
    }

    BatchResult res;
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t s = 0; s < grad_stripes; ++s) {
        res.loss_sum += stripe_loss[s];
        if (!stripe_grad[s].empty())
            for (std::size_t p = 0; p < lay.param_count; ++p) grad[p] += stripe_grad[s][p];
    }
    for (std::size_t p = 0; p < lay.param_count; ++p) grad[p] *= inv_n;
    return res;
}

}  // namespace detail

// Mean loss and gradient of one batch; exposed for gradient checking.
inline double network_loss(const NetworkConfig& cfg, const Layout& lay,
                           std::span<const double> params,
                           const std::vector<LabeledTensor>& batch) {
    Workspace ws;
    double loss = 0.0;
    for (const auto& s : batch)
        loss += euclidean_loss(forward(cfg, lay, params, s.x, ws), s.label);
    return loss / static_cast<double>(batch.size());
}

inline std::vector<double> network_gradient(const NetworkConfig& cfg, const Layout& lay,
                                            std::span<const double> params,
                                            const std::vector<LabeledTensor>& batch) {
    std::vector<double> grad(lay.param_count, 0.0);
    std::vector<const LabeledTensor*> ptrs;
    ptrs.reserve(batch.size());
    for (const auto& s : batch) ptrs.push_back(&s);
    detail::batch_gradient(cfg, lay, params, ptrs, grad);
    return grad;
}

struct TrainResult {
    TrainState state;
    std::vector<double> loss_history;  // per-epoch mean train loss
};

// Staged-batch trainer: shuffles per epoch, accumulates batch gradients in a
// fixed order and applies Adam updates. Pure function of (config, schedule,
// dataset, seed).
inline TrainResult train(const NetworkConfig& cfg, const TrainSchedule& schedule,
                         const std::vector<LabeledTensor>& data, std::uint64_t seed,
                         const NormStats& norm = {}) {
    schedule.validate();
    if (data.empty()) throw std::invalid_argument("train: empty dataset");
    const Layout lay = make_layout(cfg);

    TrainResult res;
    res.state.config = cfg;
    res.state.seed = seed;
    res.state.norm = norm;
    res.state.params = init_params(cfg, lay, seed);
    res.state.adam_m.assign(lay.param_count, 0.0);
    res.state.adam_v.assign(lay.param_count, 0.0);

    constexpr double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
    const double lr = schedule.learning_rate;

    Rng shuffle_rng(mix64(seed) ^ 0x5a5a5a5a5a5a5a5aull);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    std::vector<double> grad(lay.param_count);
    std::vector<const LabeledTensor*> batch;

    for (const std::size_t batch_size : schedule.epoch_batch_sizes()) {
        shuffle(order, shuffle_rng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < data.size(); start += batch_size) {
            const std::size_t end = std::min(data.size(), start + batch_size);
            batch.clear();
            for (std::size_t i = start; i < end; ++i) batch.push_back(&data[order[i]]);

            std::fill(grad.begin(), grad.end(), 0.0);
            const auto br = detail::batch_gradient(cfg, lay, res.state.params, batch, grad);
            epoch_loss += br.loss_sum;

            res.state.adam_step += 1;
            const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(res.state.adam_step));
            const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(res.state.adam_step));
            for (std::size_t p = 0; p < lay.param_count; ++p) {
                res.state.adam_m[p] = beta1 * res.state.adam_m[p] + (1.0 - beta1) * grad[p];
                res.state.adam_v[p] =
                    beta2 * res.state.adam_v[p] + (1.0 - beta2) * grad[p] * grad[p];
                const double m_hat = res.state.adam_m[p] / bc1;
                const double v_hat = res.state.adam_v[p] / bc2;
                res.state.params[p] -= lr * m_hat / (std::sqrt(v_hat) + adam_eps);
            }
        }
        res.state.epochs_done += 1;
        res.loss_history.push_back(epoch_loss / static_cast<double>(data.size()));
    }
    return res;
}

// Mean Euclidean error over a test set, inputs already normalized.
inline double evaluate_me(const NetworkConfig& cfg, std::span<const double> params,
                          const std::vector<LabeledTensor>& test_set) {
    if (test_set.empty()) throw std::invalid_argument("evaluate_me: empty test set");
    const Layout lay = make_layout(cfg);
    Workspace ws;
    double sum = 0.0;
    for (const auto& s : test_set)
        sum += euclidean_loss(forward(cfg, lay, params, s.x, ws), s.label);
    return sum / static_cast<double>(test_set.size());
}

inline double evaluate_me(const TrainState& state, const std::vector<LabeledTensor>& test_set) {
    return evaluate_me(state.config, state.params, test_set);
}

}  // namespace csiloc
