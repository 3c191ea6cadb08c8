#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "csiloc/fingerprint.hpp"

namespace csiloc {

// Dense 3-D array, shape channels x rows x cols. Rows index antennas and
// cols index subcarriers for network inputs.
struct Tensor3 {
    std::size_t channels = 0, rows = 0, cols = 0;
    std::vector<double> v;

    Tensor3() = default;
    Tensor3(std::size_t c, std::size_t h, std::size_t w)
        : channels(c), rows(h), cols(w), v(c * h * w, 0.0) {}

    double& at(std::size_t c, std::size_t y, std::size_t x) {
        return v[(c * rows + y) * cols + x];
    }
    double at(std::size_t c, std::size_t y, std::size_t x) const {
        return v[(c * rows + y) * cols + x];
    }
    double* row(std::size_t c, std::size_t y) { return v.data() + (c * rows + y) * cols; }
    const double* row(std::size_t c, std::size_t y) const {
        return v.data() + (c * rows + y) * cols;
    }
    std::size_t size() const { return v.size(); }
};

inline Tensor3 to_tensor(const FingerprintTensor& fp) {
    fp.validate();
    Tensor3 t(fp.planes.size(), fp.planes[0].n_antennas, fp.planes[0].n_subcarriers);
    for (std::size_t c = 0; c < fp.planes.size(); ++c)
        std::copy(fp.planes[c].v.begin(), fp.planes[c].v.end(),
                  t.v.begin() + c * t.rows * t.cols);
    return t;
}

enum class Padding { same, valid };

struct ConvSpec {
    std::size_t kernels = 32;
    std::size_t kernel_rows = 4;
    std::size_t kernel_cols = 4;
    Padding padding = Padding::same;
    std::size_t stride = 1;
};

// Max-pool window [p_ant, p_sc]: rows (antennas) first, then cols
// (subcarriers). Stride equals the window; trailing partial windows are
// truncated.
struct PoolSpec {
    std::size_t rows = 1;
    std::size_t cols = 1;
};

struct Shape3 {
    std::size_t channels = 0, rows = 0, cols = 0;
    std::size_t size() const { return channels * rows * cols; }
};

struct NetworkConfig {
    std::size_t input_channels = 1;
    std::size_t input_rows = 8;
    std::size_t input_cols = 64;
    std::vector<ConvSpec> conv;
    std::vector<PoolSpec> pool;      // one pool after each conv layer
    std::vector<std::size_t> dense;  // widths, last entry is the 2-D position

    void validate() const {
        if (conv.size() != pool.size())
            throw std::invalid_argument("each conv layer needs exactly one pool layer");
        if (dense.empty() || dense.back() != 2)
            throw std::invalid_argument("final dense width must be 2");
        for (const auto& c : conv) {
            if (c.kernels == 0 || c.kernel_rows == 0 || c.kernel_cols == 0 || c.stride == 0)
                throw std::invalid_argument("invalid conv spec");
        }
        for (const auto& p : pool) {
            if (p.rows == 0 || p.cols == 0)
                throw std::invalid_argument("pool window dims must be >= 1");
        }
        for (std::size_t w : dense) {
            if (w == 0) throw std::invalid_argument("dense width must be positive");
        }
    }
};

inline Shape3 conv_output_shape(const Shape3& in, const ConvSpec& spec) {
    Shape3 out;
    out.channels = spec.kernels;
    if (spec.padding == Padding::same) {
        out.rows = (in.rows + spec.stride - 1) / spec.stride;
        out.cols = (in.cols + spec.stride - 1) / spec.stride;
    } else {
        if (in.rows < spec.kernel_rows || in.cols < spec.kernel_cols)
            throw std::invalid_argument("conv kernel larger than input");
        out.rows = (in.rows - spec.kernel_rows) / spec.stride + 1;
        out.cols = (in.cols - spec.kernel_cols) / spec.stride + 1;
    }
    return out;
}

inline Shape3 pool_output_shape(const Shape3& in, const PoolSpec& spec) {
    if (spec.rows > in.rows || spec.cols > in.cols)
        throw std::invalid_argument("pool window larger than input");
    return {in.channels, in.rows / spec.rows, in.cols / spec.cols};
}

// Parameter layout inside the flat parameter vector: per conv layer weights
// (out, in, ky, kx) then bias (out); then per dense layer weights (out, in)
// then bias (out).
struct Layout {
    struct ConvStage {
        Shape3 in, out;
        std::size_t weight_offset = 0, bias_offset = 0;
    };
    struct PoolStage {
        Shape3 in, out;
    };
    struct DenseStage {
        std::size_t in = 0, out = 0;
        std::size_t weight_offset = 0, bias_offset = 0;
    };
    std::vector<ConvStage> conv;
    std::vector<PoolStage> pool;
    std::vector<DenseStage> dense;
    std::size_t flatten_size = 0;
    std::size_t param_count = 0;
};

inline Layout make_layout(const NetworkConfig& cfg) {
    cfg.validate();
    Layout lay;
    Shape3 shape{cfg.input_channels, cfg.input_rows, cfg.input_cols};
    std::size_t offset = 0;
    for (std::size_t i = 0; i < cfg.conv.size(); ++i) {
        Layout::ConvStage cs;
        cs.in = shape;
        cs.out = conv_output_shape(shape, cfg.conv[i]);
        cs.weight_offset = offset;
        offset += cfg.conv[i].kernels * shape.channels * cfg.conv[i].kernel_rows *
                  cfg.conv[i].kernel_cols;
        cs.bias_offset = offset;
        offset += cfg.conv[i].kernels;
        lay.conv.push_back(cs);

        Layout::PoolStage ps;
        ps.in = cs.out;
        ps.out = pool_output_shape(cs.out, cfg.pool[i]);
        lay.pool.push_back(ps);
        shape = ps.out;
    }
    lay.flatten_size = shape.size();
    std::size_t in_width = lay.flatten_size;
    for (std::size_t w : cfg.dense) {
        Layout::DenseStage ds;
        ds.in = in_width;
        ds.out = w;
        ds.weight_offset = offset;
        offset += w * in_width;
        ds.bias_offset = offset;
        offset += w;
        lay.dense.push_back(ds);
        in_width = w;
    }
    lay.param_count = offset;
    return lay;
}

namespace detail {

inline std::size_t pad_before(std::size_t kernel, std::size_t) {
    return (kernel - 1) / 2;
}

}  // namespace detail

// Cross-correlation, one output channel per kernel. "same" zero padding keeps
// the spatial dims at stride 1, padding split floor-before / ceil-after.
inline Tensor3 conv2d_forward(const Tensor3& input, const ConvSpec& spec,
                              std::span<const double> weights, std::span<const double> bias) {
    const Shape3 in{input.channels, input.rows, input.cols};
    const Shape3 os = conv_output_shape(in, spec);
    const std::size_t kh = spec.kernel_rows, kw = spec.kernel_cols;
    if (weights.size() != spec.kernels * input.channels * kh * kw)
        throw std::invalid_argument("conv weight count mismatch");
    if (bias.size() != spec.kernels) throw std::invalid_argument("conv bias count mismatch");

    const std::size_t pt = spec.padding == Padding::same ? detail::pad_before(kh, in.rows) : 0;
    const std::size_t pl = spec.padding == Padding::same ? detail::pad_before(kw, in.cols) : 0;

    Tensor3 out(os.channels, os.rows, os.cols);
    for (std::size_t co = 0; co < os.channels; ++co) {
        for (std::size_t y = 0; y < os.rows; ++y) {
            double* out_row = out.row(co, y);
            std::fill(out_row, out_row + os.cols, bias[co]);
        }
        for (std::size_t ci = 0; ci < input.channels; ++ci) {
            const double* w_base = weights.data() + ((co * input.channels) + ci) * kh * kw;
            for (std::size_t y = 0; y < os.rows; ++y) {
                double* out_row = out.row(co, y);
                for (std::size_t dy = 0; dy < kh; ++dy) {
                    const std::ptrdiff_t iy =
                        static_cast<std::ptrdiff_t>(y * spec.stride + dy) -
                        static_cast<std::ptrdiff_t>(pt);
                    if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(input.rows)) continue;
                    const double* in_row = input.row(ci, static_cast<std::size_t>(iy));
                    const double* w_row = w_base + dy * kw;
                    if (spec.stride == 1) {
                        for (std::size_t dx = 0; dx < kw; ++dx) {
                            const double w = w_row[dx];
                            const std::ptrdiff_t shift =
                                static_cast<std::ptrdiff_t>(dx) - static_cast<std::ptrdiff_t>(pl);
                            const std::size_t x_lo =
                                shift < 0 ? static_cast<std::size_t>(-shift) : 0;
                            const std::ptrdiff_t x_hi_s =
                                static_cast<std::ptrdiff_t>(input.cols) - shift;
                            const std::size_t x_hi = std::min(
                                os.cols,
                                x_hi_s < 0 ? std::size_t{0} : static_cast<std::size_t>(x_hi_s));
                            for (std::size_t x = x_lo; x < x_hi; ++x)
                                out_row[x] += w * in_row[static_cast<std::ptrdiff_t>(x) + shift];
                        }
                    } else {
                        for (std::size_t x = 0; x < os.cols; ++x) {
                            double acc = 0.0;
                            for (std::size_t dx = 0; dx < kw; ++dx) {
                                const std::ptrdiff_t ix =
                                    static_cast<std::ptrdiff_t>(x * spec.stride + dx) -
                                    static_cast<std::ptrdiff_t>(pl);
                                if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(input.cols))
                                    continue;
                                acc += w_row[dx] * in_row[ix];
                            }
                            out_row[x] += acc;
                        }
                    }
                }
            }
        }
    }
    return out;
}

// Max over non-overlapping windows; ties keep the first element in row-major
// order. argmax (flat indices into the input) is recorded when requested so
// the backward pass can route gradients.
inline Tensor3 maxpool_forward(const Tensor3& input, const PoolSpec& spec,
                               std::vector<std::size_t>* argmax = nullptr) {
    const Shape3 os = pool_output_shape({input.channels, input.rows, input.cols}, spec);
    Tensor3 out(os.channels, os.rows, os.cols);
    if (argmax) argmax->assign(out.size(), 0);
    for (std::size_t c = 0; c < os.channels; ++c) {
        for (std::size_t y = 0; y < os.rows; ++y) {
            for (std::size_t x = 0; x < os.cols; ++x) {
                double best = -std::numeric_limits<double>::infinity();
                std::size_t best_idx = 0;
                for (std::size_t dy = 0; dy < spec.rows; ++dy) {
                    const std::size_t iy = y * spec.rows + dy;
                    const double* in_row = input.row(c, iy);
                    for (std::size_t dx = 0; dx < spec.cols; ++dx) {
                        const std::size_t ix = x * spec.cols + dx;
                        if (in_row[ix] > best) {
                            best = in_row[ix];
                            best_idx = (c * input.rows + iy) * input.cols + ix;
                        }
                    }
                }
                out.at(c, y, x) = best;
                if (argmax) (*argmax)[(c * os.rows + y) * os.cols + x] = best_idx;
            }
        }
    }
    return out;
}

inline double relu(double x) { return x > 0.0 ? x : 0.0; }

// Per-sample activation caches reused across forward/backward.
struct Workspace {
    std::vector<Tensor3> conv_pre;               // pre-activation conv outputs
    std::vector<Tensor3> conv_act;               // after ReLU
    std::vector<Tensor3> pooled;                 // after max pool
    std::vector<std::vector<std::size_t>> pool_argmax;
    std::vector<std::vector<double>> dense_pre;  // pre-activation dense outputs
    std::vector<std::vector<double>> dense_act;  // after activation
    const Tensor3* input = nullptr;
    std::array<double, 2> prediction{0.0, 0.0};
};

// Full forward pass: conv -> ReLU -> pool per stage, flatten, dense stack
// with ReLU on all but the final linear layer.
inline std::array<double, 2> forward(const NetworkConfig& cfg, const Layout& lay,
                                     std::span<const double> params, const Tensor3& input,
                                     Workspace& ws) {
    if (params.size() != lay.param_count) throw std::invalid_argument("parameter count mismatch");
    if (input.channels != cfg.input_channels || input.rows != cfg.input_rows ||
        input.cols != cfg.input_cols)
        throw std::invalid_argument("input shape mismatch");

    ws.conv_pre.resize(cfg.conv.size());
    ws.conv_act.resize(cfg.conv.size());
    ws.pooled.resize(cfg.conv.size());
    ws.pool_argmax.resize(cfg.conv.size());
    ws.dense_pre.resize(cfg.dense.size());
    ws.dense_act.resize(cfg.dense.size());
    ws.input = &input;

    const Tensor3* cur = &input;
    for (std::size_t i = 0; i < cfg.conv.size(); ++i) {
        const auto& st = lay.conv[i];
        ws.conv_pre[i] = conv2d_forward(
            *cur, cfg.conv[i],
            params.subspan(st.weight_offset, st.bias_offset - st.weight_offset),
            params.subspan(st.bias_offset, cfg.conv[i].kernels));
        ws.conv_act[i] = ws.conv_pre[i];
        for (double& x : ws.conv_act[i].v) x = relu(x);
        ws.pooled[i] = maxpool_forward(ws.conv_act[i], cfg.pool[i], &ws.pool_argmax[i]);
        cur = &ws.pooled[i];
    }

    std::vector<double> vec(cur->v);
    for (std::size_t j = 0; j < cfg.dense.size(); ++j) {
        const auto& ds = lay.dense[j];
        std::vector<double> z(ds.out);
        const double* w = params.data() + ds.weight_offset;
        const double* b = params.data() + ds.bias_offset;
        for (std::size_t o = 0; o < ds.out; ++o) {
            double acc = b[o];
            const double* w_row = w + o * ds.in;
            for (std::size_t i = 0; i < ds.in; ++i) acc += w_row[i] * vec[i];
            z[o] = acc;
        }
        ws.dense_pre[j] = z;
        if (j + 1 < cfg.dense.size())
            for (double& x : z) x = relu(x);
        ws.dense_act[j] = z;
        vec = std::move(z);
    }

    ws.prediction = {vec[0], vec[1]};
    return ws.prediction;
}

inline std::array<double, 2> forward(const NetworkConfig& cfg, std::span<const double> params,
                                     const Tensor3& input) {
    Workspace ws;
    return forward(cfg, make_layout(cfg), params, input, ws);
}

// Per-sample Euclidean distance between prediction and label.
inline double euclidean_loss(const std::array<double, 2>& pred,
                             const std::array<double, 2>& label) {
    const double dx = pred[0] - label[0];
    const double dy = pred[1] - label[1];
    return std::sqrt(dx * dx + dy * dy);
}

namespace detail {

inline void conv2d_backward(const Tensor3& input, const ConvSpec& spec,
                            std::span<const double> weights, const Tensor3& d_out,
                            Tensor3& d_input, std::span<double> d_weights,
                            std::span<double> d_bias) {
    const std::size_t kh = spec.kernel_rows, kw = spec.kernel_cols;
    const std::size_t pt = spec.padding == Padding::same ? pad_before(kh, input.rows) : 0;
    const std::size_t pl = spec.padding == Padding::same ? pad_before(kw, input.cols) : 0;

    d_input = Tensor3(input.channels, input.rows, input.cols);

    for (std::size_t co = 0; co < d_out.channels; ++co) {
        double acc_b = 0.0;
        for (std::size_t y = 0; y < d_out.rows; ++y) {
            const double* g_row = d_out.row(co, y);
            for (std::size_t x = 0; x < d_out.cols; ++x) acc_b += g_row[x];
        }
        d_bias[co] += acc_b;

        for (std::size_t ci = 0; ci < input.channels; ++ci) {
            const std::size_t w_base = ((co * input.channels) + ci) * kh * kw;
            for (std::size_t y = 0; y < d_out.rows; ++y) {
                const double* g_row = d_out.row(co, y);
                for (std::size_t dy = 0; dy < kh; ++dy) {
                    const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(y * spec.stride + dy) -
                                              static_cast<std::ptrdiff_t>(pt);
                    if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(input.rows)) continue;
                    const double* in_row = input.row(ci, static_cast<std::size_t>(iy));
                    double* din_row = d_input.row(ci, static_cast<std::size_t>(iy));
                    for (std::size_t dx = 0; dx < kw; ++dx) {
                        const double w = weights[w_base + dy * kw + dx];
                        double acc_w = 0.0;
                        if (spec.stride == 1) {
                            const std::ptrdiff_t shift =
                                static_cast<std::ptrdiff_t>(dx) - static_cast<std::ptrdiff_t>(pl);
                            const std::size_t x_lo =
                                shift < 0 ? static_cast<std::size_t>(-shift) : 0;
                            const std::ptrdiff_t x_hi_s =
                                static_cast<std::ptrdiff_t>(input.cols) - shift;
                            const std::size_t x_hi = std::min(
                                d_out.cols,
                                x_hi_s < 0 ? std::size_t{0} : static_cast<std::size_t>(x_hi_s));
                            for (std::size_t x = x_lo; x < x_hi; ++x) {
                                const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(x) + shift;
                                acc_w += in_row[ix] * g_row[x];
                                din_row[ix] += w * g_row[x];
                            }
                        } else {
                            for (std::size_t x = 0; x < d_out.cols; ++x) {
                                const std::ptrdiff_t ix =
                                    static_cast<std::ptrdiff_t>(x * spec.stride + dx) -
                                    static_cast<std::ptrdiff_t>(pl);
                                if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(input.cols))
                                    continue;
                                acc_w += in_row[ix] * g_row[x];
                                din_row[ix] += w * g_row[x];
                            }
                        }
                        d_weights[w_base + dy * kw + dx] += acc_w;
                    }
                }
            }
        }
    }
}

}  // namespace detail

// Exact gradient of the per-sample Euclidean loss w.r.t. all parameters,
// accumulated into grad (so batch gradients can be summed in a fixed order).
// The distance gradient at pred == label is defined as zero.
inline void backward(const NetworkConfig& cfg, const Layout& lay, std::span<const double> params,
                     const Workspace& ws, const std::array<double, 2>& label,
                     std::span<double> grad) {
    if (grad.size() != lay.param_count) throw std::invalid_argument("gradient size mismatch");

    const double dx = ws.prediction[0] - label[0];
    const double dy = ws.prediction[1] - label[1];
    const double dist = std::sqrt(dx * dx + dy * dy);
    std::vector<double> delta(2, 0.0);
    if (dist > 0.0) {
        delta[0] = dx / dist;
        delta[1] = dy / dist;
    }

    // dense stack, last layer linear
    for (std::size_t j = cfg.dense.size(); j-- > 0;) {
        const auto& ds = lay.dense[j];
        const double* input_vec =
            j > 0 ? ws.dense_act[j - 1].data()
                  : (cfg.conv.empty() ? ws.input->v.data() : ws.pooled.back().v.data());
        const double* w = params.data() + ds.weight_offset;
        double* dw = grad.data() + ds.weight_offset;
        double* db = grad.data() + ds.bias_offset;

        std::vector<double> d_in(ds.in, 0.0);
        for (std::size_t o = 0; o < ds.out; ++o) {
            const double g = delta[o];
            db[o] += g;
            const double* w_row = w + o * ds.in;
            double* dw_row = dw + o * ds.in;
            for (std::size_t i = 0; i < ds.in; ++i) {
                dw_row[i] += g * input_vec[i];
                d_in[i] += g * w_row[i];
            }
        }
        if (j > 0) {
            // ReLU derivative on the previous layer's pre-activation
            const auto& pre = ws.dense_pre[j - 1];
            for (std::size_t i = 0; i < d_in.size(); ++i)
                if (pre[i] <= 0.0) d_in[i] = 0.0;
        }
        delta = std::move(d_in);
    }

    if (cfg.conv.empty()) return;

    // delta now matches the flattened final pooled tensor
    Tensor3 d_pool(lay.pool.back().out.channels, lay.pool.back().out.rows,
                   lay.pool.back().out.cols);
    std::copy(delta.begin(), delta.end(), d_pool.v.begin());

    for (std::size_t i = cfg.conv.size(); i-- > 0;) {
        // pool backward: route to argmax
        Tensor3 d_act(ws.conv_act[i].channels, ws.conv_act[i].rows, ws.conv_act[i].cols);
        const auto& argmax = ws.pool_argmax[i];
        for (std::size_t o = 0; o < d_pool.v.size(); ++o) d_act.v[argmax[o]] += d_pool.v[o];

        // ReLU backward
        for (std::size_t o = 0; o < d_act.v.size(); ++o)
            if (ws.conv_pre[i].v[o] <= 0.0) d_act.v[o] = 0.0;

        const Tensor3& stage_input = i == 0 ? *ws.input : ws.pooled[i - 1];
        const auto& st = lay.conv[i];
        Tensor3 d_in;
        detail::conv2d_backward(
            stage_input, cfg.conv[i],
            params.subspan(st.weight_offset, st.bias_offset - st.weight_offset), d_act, d_in,
            grad.subspan(st.weight_offset, st.bias_offset - st.weight_offset),
            grad.subspan(st.bias_offset, cfg.conv[i].kernels));
        if (i > 0) {
            d_pool = std::move(d_in);
        }
    }
}

}  // namespace csiloc
