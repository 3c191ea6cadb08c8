#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "csiloc/nn.hpp"
#include "csiloc/train.hpp"

using namespace csiloc;

namespace {

Tensor3 filled(std::size_t c, std::size_t h, std::size_t w, double value) {
    Tensor3 t(c, h, w);
    std::fill(t.v.begin(), t.v.end(), value);
    return t;
}

Tensor3 random_tensor(std::size_t c, std::size_t h, std::size_t w, Rng& rng, double lo = -1.0,
                      double hi = 1.0) {
    Tensor3 t(c, h, w);
    for (auto& x : t.v) x = rng.uniform(lo, hi);
    return t;
}

// Central finite differences on the flat parameter vector.
std::vector<double> fd_gradient(const NetworkConfig& cfg, const Layout& lay,
                                std::vector<double> params,
                                const std::vector<LabeledTensor>& batch, double h = 1e-4) {
    std::vector<double> grad(lay.param_count);
    for (std::size_t p = 0; p < lay.param_count; ++p) {
        const double saved = params[p];
        params[p] = saved + h;
        const double plus = network_loss(cfg, lay, params, batch);
        params[p] = saved - h;
        const double minus = network_loss(cfg, lay, params, batch);
        params[p] = saved;
        grad[p] = (plus - minus) / (2.0 * h);
    }
    return grad;
}

bool gradients_close(const std::vector<double>& analytic, const std::vector<double>& fd,
                     double tol = 1e-5) {
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        const double scale = std::max({1.0, std::abs(analytic[i]), std::abs(fd[i])});
        if (std::abs(analytic[i] - fd[i]) > tol * scale) return false;
    }
    return true;
}

// A finite-difference check near a ReLU kink, a pooling tie or a zero-distance
// loss is meaningless; regenerate until every nonlinearity has margin.
bool margins_ok(const NetworkConfig& cfg, const Layout& lay, std::span<const double> params,
                const std::vector<LabeledTensor>& batch, double margin = 2e-2) {
    Workspace ws;
    for (const auto& sample : batch) {
        const auto pred = forward(cfg, lay, params, sample.x, ws);
        if (euclidean_loss(pred, sample.label) < margin) return false;
        for (const auto& pre : ws.conv_pre)
            for (double z : pre.v)
                if (std::abs(z) < margin) return false;
        for (std::size_t j = 0; j + 1 < ws.dense_pre.size(); ++j)
            for (double z : ws.dense_pre[j])
                if (std::abs(z) < margin) return false;
        // pooling win margins
        for (std::size_t i = 0; i < cfg.pool.size(); ++i) {
            const auto& act = ws.conv_act[i];
            const auto& p = cfg.pool[i];
            for (std::size_t c = 0; c < act.channels; ++c) {
                for (std::size_t y = 0; y + p.rows <= act.rows; y += p.rows) {
                    for (std::size_t x = 0; x + p.cols <= act.cols; x += p.cols) {
                        double best = -1e300, second = -1e300;
                        for (std::size_t dy = 0; dy < p.rows; ++dy)
                            for (std::size_t dx = 0; dx < p.cols; ++dx) {
                                const double v = act.at(c, y + dy, x + dx);
                                if (v > best) {
                                    second = best;
                                    best = v;
                                } else if (v > second) {
                                    second = v;
                                }
                            }
                        if (p.rows * p.cols > 1 && best - second < margin) return false;
                    }
                }
            }
        }
    }
    return true;
}

struct GradTrial {
    NetworkConfig cfg;
    Layout lay;
    std::vector<double> params;
    std::vector<LabeledTensor> batch;
};

// Randomized tiny network covering conv, both pooling axes, dense and the
// loss; deterministic per seed, re-rolled until margins hold.
GradTrial make_grad_trial(std::uint64_t seed) {
    for (std::uint64_t attempt = 0;; ++attempt) {
        Rng rng(mix64(seed) + attempt);
        GradTrial t;
        t.cfg.input_channels = 1 + rng.index(2);
        t.cfg.input_rows = 4 + rng.index(3);
        t.cfg.input_cols = 4 + rng.index(5);
        const bool pool_rows_first = rng.index(2) == 0;
        t.cfg.conv = {{1 + rng.index(2), 2, 2, Padding::same, 1},
                      {1 + rng.index(2), 2, 2, rng.index(2) ? Padding::same : Padding::valid, 1}};
        t.cfg.pool = {pool_rows_first ? PoolSpec{2, 1} : PoolSpec{1, 2},
                      pool_rows_first ? PoolSpec{1, 2} : PoolSpec{2, 1}};
        t.cfg.dense = {3 + rng.index(3), 2};
        t.lay = make_layout(t.cfg);

        t.params.resize(t.lay.param_count);
        for (auto& p : t.params) p = rng.uniform(-0.9, 0.9);

        const std::size_t batch_size = 1 + rng.index(3);
        for (std::size_t b = 0; b < batch_size; ++b) {
            LabeledTensor s;
            s.x = random_tensor(t.cfg.input_channels, t.cfg.input_rows, t.cfg.input_cols, rng);
            s.label = {rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)};
            t.batch.push_back(std::move(s));
        }
        if (margins_ok(t.cfg, t.lay, t.params, t.batch)) return t;
    }
}

}  // namespace

TEST_CASE("conv2d: 1x1 unit kernel with zero bias is the identity") {
    Rng rng(3);
    const Tensor3 in = random_tensor(1, 3, 4, rng);
    const ConvSpec spec{1, 1, 1, Padding::same, 1};
    const std::vector<double> w = {1.0}, b = {0.0};
    const Tensor3 out = conv2d_forward(in, spec, w, b);
    REQUIRE(out.v.size() == in.v.size());
    for (std::size_t i = 0; i < in.v.size(); ++i) CHECK(out.v[i] == in.v[i]);
}

TEST_CASE("conv2d: all-ones 3x3 input with 2x2 ones kernel, valid padding") {
    const Tensor3 in = filled(1, 3, 3, 1.0);
    const ConvSpec spec{1, 2, 2, Padding::valid, 1};
    const std::vector<double> w(4, 1.0), b = {0.0};
    const Tensor3 out = conv2d_forward(in, spec, w, b);
    REQUIRE(out.rows == 2);
    REQUIRE(out.cols == 2);
    for (double x : out.v) CHECK_THAT(x, Catch::Matchers::WithinAbs(4.0, 1e-15));
}

TEST_CASE("conv2d: linear in the input for zero bias") {
    Rng rng(9);
    const Tensor3 in = random_tensor(2, 5, 6, rng);
    Tensor3 scaled = in;
    for (auto& x : scaled.v) x *= 3.5;

    const ConvSpec spec{3, 3, 3, Padding::same, 1};
    std::vector<double> w(3 * 2 * 9), b(3, 0.0);
    for (auto& x : w) x = rng.uniform(-1.0, 1.0);

    const Tensor3 a = conv2d_forward(in, spec, w, b);
    const Tensor3 c = conv2d_forward(scaled, spec, w, b);
    for (std::size_t i = 0; i < a.v.size(); ++i)
        CHECK_THAT(c.v[i], Catch::Matchers::WithinAbs(3.5 * a.v[i], 1e-12));
}

TEST_CASE("conv2d: same padding keeps the spatial dims") {
    Rng rng(1);
    const Tensor3 in = random_tensor(3, 8, 64, rng);
    const ConvSpec spec{32, 4, 4, Padding::same, 1};
    std::vector<double> w(32 * 3 * 16), b(32, 0.1);
    for (auto& x : w) x = rng.uniform(-0.2, 0.2);
    const Tensor3 out = conv2d_forward(in, spec, w, b);
    CHECK(out.channels == 32);
    CHECK(out.rows == 8);
    CHECK(out.cols == 64);
}

TEST_CASE("maxpool: window [1,1] is the identity") {
    Rng rng(4);
    const Tensor3 in = random_tensor(2, 3, 5, rng);
    const Tensor3 out = maxpool_forward(in, {1, 1});
    for (std::size_t i = 0; i < in.v.size(); ++i) CHECK(out.v[i] == in.v[i]);
}

TEST_CASE("maxpool: hand-evaluated windows along each axis") {
    Tensor3 in(1, 2, 4);
    in.v = {1, 2, 3, 4, 5, 6, 7, 8};

    const Tensor3 col = maxpool_forward(in, {1, 4});
    REQUIRE(col.rows == 2);
    REQUIRE(col.cols == 1);
    CHECK(col.v[0] == 4.0);
    CHECK(col.v[1] == 8.0);

    const Tensor3 row = maxpool_forward(in, {2, 1});
    REQUIRE(row.rows == 1);
    REQUIRE(row.cols == 4);
    CHECK(row.v == std::vector<double>{5, 6, 7, 8});
}

TEST_CASE("maxpool: truncates trailing partial windows") {
    Tensor3 in(1, 1, 5);
    in.v = {1, 9, 2, 3, 7};
    const Tensor3 out = maxpool_forward(in, {1, 2});
    REQUIRE(out.cols == 2);
    CHECK(out.v[0] == 9.0);
    CHECK(out.v[1] == 3.0);
}

TEST_CASE("maxpool: rejects windows larger than the input") {
    const Tensor3 in = filled(1, 2, 4, 0.0);
    CHECK_THROWS_AS(maxpool_forward(in, {3, 1}), std::invalid_argument);
    CHECK_THROWS_AS(maxpool_forward(in, {1, 5}), std::invalid_argument);
}

TEST_CASE("maxpool: ties resolve to the first element in row-major order") {
    Tensor3 in(1, 1, 2);
    in.v = {5.0, 5.0};
    std::vector<std::size_t> argmax;
    maxpool_forward(in, {1, 2}, &argmax);
    REQUIRE(argmax.size() == 1);
    CHECK(argmax[0] == 0);
}

TEST_CASE("forward: all-zero parameters give (0, 0)") {
    NetworkConfig cfg;
    cfg.input_channels = 2;
    cfg.input_rows = 4;
    cfg.input_cols = 8;
    cfg.conv = {{4, 2, 2, Padding::same, 1}};
    cfg.pool = {{2, 2}};
    cfg.dense = {5, 2};
    const Layout lay = make_layout(cfg);
    const std::vector<double> params(lay.param_count, 0.0);

    Rng rng(8);
    Tensor3 in = random_tensor(2, 4, 8, rng);
    Workspace ws;
    const auto pred = forward(cfg, lay, params, in, ws);
    CHECK(pred[0] == 0.0);
    CHECK(pred[1] == 0.0);
}

TEST_CASE("forward: hand-evaluated identity-style network") {
    NetworkConfig cfg;
    cfg.input_channels = 1;
    cfg.input_rows = 2;
    cfg.input_cols = 2;
    cfg.conv = {{1, 1, 1, Padding::same, 1}};
    cfg.pool = {{1, 1}};
    cfg.dense = {2};
    const Layout lay = make_layout(cfg);
    REQUIRE(lay.flatten_size == 4);

    std::vector<double> params(lay.param_count, 0.0);
    params[lay.conv[0].weight_offset] = 1.0;  // unit kernel, zero bias
    // dense W row 0 sums all inputs, row 1 = x0 - x1
    double* w = params.data() + lay.dense[0].weight_offset;
    w[0] = w[1] = w[2] = w[3] = 1.0;
    w[4] = 1.0;
    w[5] = -1.0;

    Tensor3 in(1, 2, 2);
    in.v = {1.0, 2.0, 3.0, 4.0};
    Workspace ws;
    const auto pred = forward(cfg, lay, params, in, ws);
    CHECK_THAT(pred[0], Catch::Matchers::WithinAbs(10.0, 1e-15));
    CHECK_THAT(pred[1], Catch::Matchers::WithinAbs(-1.0, 1e-15));
}

TEST_CASE("forward: doubling final-layer weights doubles a positive-region output") {
    GradTrial t = make_grad_trial(21);
    Workspace ws;
    const auto pred = forward(t.cfg, t.lay, t.params, t.batch[0].x, ws);

    std::vector<double> doubled = t.params;
    const auto& last = t.lay.dense.back();
    for (std::size_t p = last.weight_offset; p < t.lay.param_count; ++p) doubled[p] *= 2.0;
    const auto pred2 = forward(t.cfg, t.lay, doubled, t.batch[0].x, ws);
    CHECK_THAT(pred2[0], Catch::Matchers::WithinAbs(2.0 * pred[0], 1e-12));
    CHECK_THAT(pred2[1], Catch::Matchers::WithinAbs(2.0 * pred[1], 1e-12));
}

TEST_CASE("euclidean loss basics") {
    CHECK(euclidean_loss({1.0, 2.0}, {1.0, 2.0}) == 0.0);
    CHECK_THAT(euclidean_loss({3.0, 4.0}, {0.0, 0.0}), Catch::Matchers::WithinAbs(5.0, 1e-15));
    // batch of per-sample distances 0 and 5 averages to 2.5
    CHECK_THAT(0.5 * (euclidean_loss({0, 0}, {0, 0}) + euclidean_loss({3, 4}, {0, 0})),
               Catch::Matchers::WithinAbs(2.5, 1e-15));
}

TEST_CASE("backward: gradient matches finite differences on randomized tiny networks") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const GradTrial t = make_grad_trial(seed);
        const auto analytic = network_gradient(t.cfg, t.lay, t.params, t.batch);
        const auto fd = fd_gradient(t.cfg, t.lay, t.params, t.batch);
        INFO("trial seed " << seed);
        CHECK(gradients_close(analytic, fd));
    }
}

TEST_CASE("backward: finite differences also hold for strided convolution") {
    for (std::uint64_t seed = 100;; ++seed) {
        Rng rng(seed);
        NetworkConfig cfg;
        cfg.input_channels = 2;
        cfg.input_rows = 6;
        cfg.input_cols = 9;
        cfg.conv = {{2, 3, 3, Padding::same, 2}, {2, 2, 2, Padding::valid, 1}};
        cfg.pool = {{1, 1}, {1, 2}};
        cfg.dense = {4, 2};
        const Layout lay = make_layout(cfg);

        std::vector<double> params(lay.param_count);
        for (auto& p : params) p = rng.uniform(-0.8, 0.8);
        std::vector<LabeledTensor> batch(2);
        for (auto& s : batch) {
            s.x = random_tensor(2, 6, 9, rng);
            s.label = {rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)};
        }
        if (!margins_ok(cfg, lay, params, batch)) continue;

        const auto analytic = network_gradient(cfg, lay, params, batch);
        const auto fd = fd_gradient(cfg, lay, params, batch);
        CHECK(gradients_close(analytic, fd));
        break;
    }
}

TEST_CASE("backward: zero-distance batch produces zero gradients") {
    NetworkConfig cfg;
    cfg.input_channels = 1;
    cfg.input_rows = 2;
    cfg.input_cols = 2;
    cfg.conv = {{1, 2, 2, Padding::same, 1}};
    cfg.pool = {{1, 1}};
    cfg.dense = {2};
    const Layout lay = make_layout(cfg);
    const std::vector<double> params(lay.param_count, 0.0);

    LabeledTensor s;
    s.x = filled(1, 2, 2, 0.7);
    s.label = {0.0, 0.0};  // zero params predict (0,0): distance 0
    const auto grad = network_gradient(cfg, lay, params, {s});
    for (double g : grad) CHECK(g == 0.0);
}

TEST_CASE("backward: non-argmax pooled elements receive no gradient") {
    NetworkConfig cfg;
    cfg.input_channels = 1;
    cfg.input_rows = 1;
    cfg.input_cols = 2;
    cfg.conv = {{1, 1, 1, Padding::same, 1}};
    cfg.pool = {{1, 2}};
    cfg.dense = {2};
    const Layout lay = make_layout(cfg);

    std::vector<double> params(lay.param_count, 0.0);
    params[lay.conv[0].weight_offset] = 1.0;           // conv: z = x
    params[lay.dense[0].weight_offset] = 1.0;          // W = ((1), (0))

    LabeledTensor s;
    s.x = Tensor3(1, 1, 2);
    s.x.v = {1.0, 2.0};  // argmax is the second element
    s.label = {0.0, 0.0};

    const auto grad = network_gradient(cfg, lay, params, {s});
    // prediction (2, 0), unit gradient (1, 0); conv weight sees only the
    // argmax input value 2, the frozen element contributes nothing
    CHECK_THAT(grad[lay.conv[0].weight_offset], Catch::Matchers::WithinAbs(2.0, 1e-12));
    CHECK_THAT(grad[lay.conv[0].bias_offset], Catch::Matchers::WithinAbs(1.0, 1e-12));
    CHECK_THAT(grad[lay.dense[0].weight_offset], Catch::Matchers::WithinAbs(2.0, 1e-12));
    CHECK(grad[lay.dense[0].weight_offset + 1] == 0.0);
}

TEST_CASE("normalization: fit/apply map the training range onto [0, 1] exactly") {
    std::vector<LabeledTensor> set(2);
    set[0].x = Tensor3(1, 1, 3);
    set[0].x.v = {-pi, 0.0, 1.0};
    set[1].x = Tensor3(1, 1, 3);
    set[1].x.v = {0.5, pi - 0.1, -1.0};

    const NormStats stats = normalize_fit(set, {PlaneSemantic::phase_raw});
    CHECK(stats.planes[0].min == -pi);
    CHECK(stats.planes[0].max == pi - 0.1);

    normalize_apply(stats, set);
    double lo = 1e300, hi = -1e300;
    for (const auto& s : set)
        for (double x : s.x.v) {
            lo = std::min(lo, x);
            hi = std::max(hi, x);
        }
    CHECK(lo == 0.0);
    CHECK(hi == 1.0);
}

TEST_CASE("normalization: constant plane is rejected") {
    std::vector<LabeledTensor> set(1);
    set[0].x = filled(1, 2, 2, 0.3);
    CHECK_THROWS_AS(normalize_fit(set, {PlaneSemantic::magnitude}), std::invalid_argument);
}

TEST_CASE("normalization: test values outside the training range are not clipped") {
    std::vector<LabeledTensor> train(1);
    train[0].x = Tensor3(1, 1, 2);
    train[0].x.v = {0.0, 2.0};
    const NormStats stats = normalize_fit(train, {PlaneSemantic::magnitude});

    Tensor3 test(1, 1, 2);
    test.v = {3.0, -1.0};
    normalize_apply(stats, test);
    CHECK(test.v[0] > 1.0);
    CHECK(test.v[1] < 0.0);
}

TEST_CASE("schedule: staged default and its epoch boundaries") {
    const TrainSchedule s = TrainSchedule::staged(false);
    const auto sizes = s.epoch_batch_sizes();
    REQUIRE(sizes.size() == 120);
    CHECK(sizes[0] == 32);
    CHECK(sizes[29] == 32);
    CHECK(sizes[30] == 128);
    CHECK(sizes[59] == 128);
    CHECK(sizes[60] == 256);
    CHECK(sizes[89] == 256);
    CHECK(sizes[90] == 1024);
    CHECK(sizes[119] == 1024);

    const TrainSchedule h = TrainSchedule::staged(true);
    CHECK(h.total_epochs() == 60);
}

TEST_CASE("train: identical seeds give bit-identical loss histories") {
    NetworkConfig cfg;
    cfg.input_channels = 1;
    cfg.input_rows = 2;
    cfg.input_cols = 4;
    cfg.conv = {{2, 2, 2, Padding::same, 1}};
    cfg.pool = {{1, 2}};
    cfg.dense = {4, 2};

    Rng rng(2);
    std::vector<LabeledTensor> data;
    for (int i = 0; i < 7; ++i) {
        LabeledTensor s;
        s.x = random_tensor(1, 2, 4, rng, 0.0, 1.0);
        s.label = {rng.uniform(0.0, 0.5), rng.uniform(0.0, 0.5)};
        data.push_back(std::move(s));
    }

    TrainSchedule sched;
    sched.stages = {{4, 3}, {8, 2}};
    const auto a = train(cfg, sched, data, 77);
    const auto b = train(cfg, sched, data, 77);
    REQUIRE(a.loss_history.size() == 5);
    for (std::size_t e = 0; e < a.loss_history.size(); ++e)
        CHECK(a.loss_history[e] == b.loss_history[e]);
    for (std::size_t p = 0; p < a.state.params.size(); ++p)
        CHECK(a.state.params[p] == b.state.params[p]);

    const auto c = train(cfg, sched, data, 78);
    bool any_diff = false;
    for (std::size_t e = 0; e < a.loss_history.size(); ++e)
        any_diff = any_diff || a.loss_history[e] != c.loss_history[e];
    CHECK(any_diff);
}

TEST_CASE("train: loss decreases on a small memorization run") {
    NetworkConfig cfg;
    cfg.input_channels = 1;
    cfg.input_rows = 2;
    cfg.input_cols = 4;
    cfg.conv = {{2, 2, 2, Padding::same, 1}};
    cfg.pool = {{1, 2}};
    cfg.dense = {8, 2};

    Rng rng(6);
    std::vector<LabeledTensor> data(2);
    for (auto& s : data) {
        s.x = random_tensor(1, 2, 4, rng, 0.0, 1.0);
        s.label = {rng.uniform(0.0, 0.5), rng.uniform(0.0, 0.5)};
    }
    TrainSchedule sched;
    sched.stages = {{2, 150}};
    sched.learning_rate = 3e-3;
    const auto res = train(cfg, sched, data, 3);
    CHECK(res.loss_history.back() < 0.25 * res.loss_history.front());
}

TEST_CASE("train: rejects an empty dataset") {
    NetworkConfig cfg;
    cfg.dense = {2};
    CHECK_THROWS_AS(train(cfg, TrainSchedule::staged(), {}, 0), std::invalid_argument);
}

TEST_CASE("evaluate_me: perfect and centroid predictors") {
    // no conv stages, dense pass-through sized for a 1x1x1 input
    NetworkConfig cfg;
    cfg.input_channels = 1;
    cfg.input_rows = 1;
    cfg.input_cols = 1;
    cfg.dense = {2};
    const Layout lay = make_layout(cfg);

    std::vector<LabeledTensor> test(2);
    test[0].x = filled(1, 1, 1, 0.0);
    test[0].label = {1.0, 0.0};
    test[1].x = filled(1, 1, 1, 0.0);
    test[1].label = {-1.0, 0.0};

    // constant predictor at the centroid (0, 0): both distances 1
    std::vector<double> params(lay.param_count, 0.0);
    CHECK_THAT(evaluate_me(cfg, params, test), Catch::Matchers::WithinAbs(1.0, 1e-15));

    // perfect predictor for a single point
    std::vector<LabeledTensor> one(1);
    one[0].x = filled(1, 1, 1, 0.0);
    one[0].label = {0.3, -0.4};
    params[lay.dense[0].bias_offset] = 0.3;
    params[lay.dense[0].bias_offset + 1] = -0.4;
    CHECK(evaluate_me(cfg, params, one) == 0.0);

    CHECK_THROWS_AS(evaluate_me(cfg, params, {}), std::invalid_argument);
}

TEST_CASE("evaluate_me equals the mean of per-sample distances") {
    GradTrial t = make_grad_trial(31);
    Workspace ws;
    double sum = 0.0;
    for (const auto& s : t.batch)
        sum += euclidean_loss(forward(t.cfg, t.lay, t.params, s.x, ws), s.label);
    const double expected = sum / double(t.batch.size());
    CHECK_THAT(evaluate_me(t.cfg, t.params, t.batch),
               Catch::Matchers::WithinAbs(expected, 1e-12));
}

TEST_CASE("pooling parity: equal flattened feature counts when dims divide") {
    for (const std::size_t n_c : {64u, 32u, 48u}) {
        std::vector<std::size_t> flat_sizes;
        for (const PoolSpec p : {PoolSpec{1, 4}, PoolSpec{2, 2}, PoolSpec{4, 1}}) {
            NetworkConfig cfg;
            cfg.input_channels = 3;
            cfg.input_rows = 64;
            cfg.input_cols = n_c;
            cfg.conv = {{32, 4, 4, Padding::same, 1}, {32, 4, 4, Padding::same, 1}};
            cfg.pool = {p, p};
            cfg.dense = {256, 128, 64, 2};
            flat_sizes.push_back(make_layout(cfg).flatten_size);
        }
        CHECK(flat_sizes[0] == flat_sizes[1]);
        CHECK(flat_sizes[1] == flat_sizes[2]);
    }
}

TEST_CASE("zero-bias first layer is positively homogeneous in the input") {
    GradTrial t = make_grad_trial(13);
    // zero all biases of the first conv layer
    for (std::size_t p = t.lay.conv[0].bias_offset;
         p < t.lay.conv[0].bias_offset + t.cfg.conv[0].kernels; ++p)
        t.params[p] = 0.0;

    const double a = 2.7;
    Tensor3 scaled = t.batch[0].x;
    for (auto& x : scaled.v) x *= a;

    Workspace w1, w2;
    forward(t.cfg, t.lay, t.params, t.batch[0].x, w1);
    forward(t.cfg, t.lay, t.params, scaled, w2);
    for (std::size_t i = 0; i < w1.conv_pre[0].v.size(); ++i)
        CHECK_THAT(w2.conv_pre[0].v[i],
                   Catch::Matchers::WithinAbs(a * w1.conv_pre[0].v[i], 1e-12));
}

TEST_CASE("network config validation") {
    NetworkConfig cfg;
    cfg.conv = {{4, 2, 2, Padding::same, 1}};
    cfg.pool = {};
    cfg.dense = {2};
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

    cfg.pool = {{2, 2}};
    cfg.dense = {8, 3};
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

    cfg.dense = {8, 2};
    CHECK_NOTHROW(cfg.validate());
}
