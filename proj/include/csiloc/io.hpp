#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "csiloc/channel.hpp"
#include "csiloc/fingerprint.hpp"
#include "csiloc/train.hpp"

namespace csiloc {

struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct bad_magic_error : io_error {
    using io_error::io_error;
};
struct version_error : io_error {
    using io_error::io_error;
};
struct truncated_error : io_error {
    using io_error::io_error;
};
struct shape_error : io_error {
    using io_error::io_error;
};

namespace detail {

// All on-disk integers and floats are little-endian, packed byte-wise so the
// format does not depend on host endianness.
class Writer {
public:
    explicit Writer(const std::string& path) : out_(path, std::ios::binary) {
        if (!out_) throw io_error("cannot open for writing: " + path);
    }

    void bytes(const void* p, std::size_t n) {
        out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
        if (!out_) throw io_error("write failed");
    }
    void u8(std::uint8_t v) { bytes(&v, 1); }
    void u32(std::uint32_t v) {
        std::uint8_t b[4] = {static_cast<std::uint8_t>(v), static_cast<std::uint8_t>(v >> 8),
                             static_cast<std::uint8_t>(v >> 16),
                             static_cast<std::uint8_t>(v >> 24)};
        bytes(b, 4);
    }
    void u64(std::uint64_t v) {
        u32(static_cast<std::uint32_t>(v));
        u32(static_cast<std::uint32_t>(v >> 32));
    }
    void f32(float v) {
        std::uint32_t u;
        std::memcpy(&u, &v, 4);
        u32(u);
    }
    void f64(double v) {
        std::uint64_t u;
        std::memcpy(&u, &v, 8);
        u64(u);
    }

private:
    std::ofstream out_;
};

class Reader {
public:
    explicit Reader(const std::string& path) : in_(path, std::ios::binary) {
        if (!in_) throw io_error("cannot open for reading: " + path);
        in_.seekg(0, std::ios::end);
        file_size_ = static_cast<std::uint64_t>(in_.tellg());
        in_.seekg(0, std::ios::beg);
    }

    void bytes(void* p, std::size_t n) {
        in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n)
            throw truncated_error("file truncated");
        consumed_ += n;
    }
    std::uint8_t u8() {
        std::uint8_t v;
        bytes(&v, 1);
        return v;
    }
    std::uint32_t u32() {
        std::uint8_t b[4];
        bytes(b, 4);
        return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
               (static_cast<std::uint32_t>(b[2]) << 16) |
               (static_cast<std::uint32_t>(b[3]) << 24);
    }
    std::uint64_t u64() {
        const std::uint64_t lo = u32();
        const std::uint64_t hi = u32();
        return lo | (hi << 32);
    }
    float f32() {
        const std::uint32_t u = u32();
        float v;
        std::memcpy(&v, &u, 4);
        return v;
    }
    double f64() {
        const std::uint64_t u = u64();
        double v;
        std::memcpy(&v, &u, 8);
        return v;
    }

    std::uint64_t file_size() const { return file_size_; }
    std::uint64_t consumed() const { return consumed_; }

    void expect_eof() const {
        if (consumed_ != file_size_)
            throw shape_error("file has trailing bytes beyond declared payload");
    }

private:
    std::ifstream in_;
    std::uint64_t file_size_ = 0;
    std::uint64_t consumed_ = 0;
};

}  // namespace detail

// ---- dataset container --------------------------------------------------------

// Layout: magic "CSFP", version, endianness tag, N_R, N_C, plane count,
// plane semantics, sample count; then the f32 payload (sample-major,
// plane-major within a sample, antenna-major within a plane) and the f64
// label pairs.
struct Dataset {
    std::size_t n_antennas = 0;
    std::size_t n_subcarriers = 0;
    std::vector<PlaneSemantic> semantics;
    std::vector<LabeledTensor> samples;
};

inline constexpr std::uint32_t dataset_format_version = 1;

inline void write_dataset(const Dataset& ds, const std::string& path) {
    for (const auto& s : ds.samples) {
        if (s.x.channels != ds.semantics.size() || s.x.rows != ds.n_antennas ||
            s.x.cols != ds.n_subcarriers)
            throw shape_error("sample shape disagrees with dataset header");
    }
    detail::Writer w(path);
    w.bytes("CSFP", 4);
    w.u32(dataset_format_version);
    w.u8(1);  // little-endian payload
    w.u32(static_cast<std::uint32_t>(ds.n_antennas));
    w.u32(static_cast<std::uint32_t>(ds.n_subcarriers));
    w.u32(static_cast<std::uint32_t>(ds.semantics.size()));
    for (const auto s : ds.semantics) w.u8(static_cast<std::uint8_t>(s));
    w.u64(ds.samples.size());
    for (const auto& s : ds.samples)
        for (const double x : s.x.v) w.f32(static_cast<float>(x));
    for (const auto& s : ds.samples) {
        w.f64(s.label[0]);
        w.f64(s.label[1]);
    }
}

inline Dataset read_dataset(const std::string& path) {
    detail::Reader r(path);
    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, "CSFP", 4) != 0) throw bad_magic_error("not a dataset container");
    const std::uint32_t version = r.u32();
    if (version != dataset_format_version)
        throw version_error("unsupported dataset version " + std::to_string(version));
    const std::uint8_t endian = r.u8();
    if (endian != 1) throw version_error("unsupported endianness tag");

    Dataset ds;
    ds.n_antennas = r.u32();
    ds.n_subcarriers = r.u32();
    const std::uint32_t plane_count = r.u32();
    if (plane_count == 0) throw shape_error("dataset declares zero planes");
    for (std::uint32_t i = 0; i < plane_count; ++i)
        ds.semantics.push_back(static_cast<PlaneSemantic>(r.u8()));
    const std::uint64_t sample_count = r.u64();

    const std::uint64_t plane_size =
        static_cast<std::uint64_t>(ds.n_antennas) * ds.n_subcarriers;
    const std::uint64_t expected = r.consumed() + sample_count * plane_count * plane_size * 4 +
                                   sample_count * 16;
    if (r.file_size() < expected) throw truncated_error("payload shorter than header declares");
    if (r.file_size() > expected) throw shape_error("payload longer than header declares");

    ds.samples.resize(sample_count);
    for (auto& s : ds.samples) {
        s.x = Tensor3(plane_count, ds.n_antennas, ds.n_subcarriers);
        for (double& x : s.x.v) x = static_cast<double>(r.f32());
    }
    for (auto& s : ds.samples) {
        s.label[0] = r.f64();
        s.label[1] = r.f64();
    }
    r.expect_eof();
    return ds;
}

// Raw complex snapshots as a two-plane (real, imaginary) dataset.
inline Dataset grids_to_dataset(const std::vector<LabeledGrid>& grids) {
    if (grids.empty()) throw std::invalid_argument("empty grid list");
    Dataset ds;
    ds.n_antennas = grids[0].grid.n_antennas;
    ds.n_subcarriers = grids[0].grid.n_subcarriers;
    ds.semantics = {PlaneSemantic::real_part, PlaneSemantic::imag_part};
    ds.samples.reserve(grids.size());
    for (const auto& g : grids) {
        LabeledTensor t;
        t.x = Tensor3(2, ds.n_antennas, ds.n_subcarriers);
        for (std::size_t i = 0; i < g.grid.v.size(); ++i) {
            t.x.v[i] = g.grid.v[i].real();
            t.x.v[g.grid.v.size() + i] = g.grid.v[i].imag();
        }
        t.label = {g.x, g.y};
        ds.samples.push_back(std::move(t));
    }
    return ds;
}

inline std::vector<LabeledGrid> dataset_to_grids(const Dataset& ds) {
    if (ds.semantics.size() != 2 || ds.semantics[0] != PlaneSemantic::real_part ||
        ds.semantics[1] != PlaneSemantic::imag_part)
        throw shape_error("dataset does not hold raw real/imaginary planes");
    std::vector<LabeledGrid> grids;
    grids.reserve(ds.samples.size());
    for (const auto& s : ds.samples) {
        LabeledGrid g;
        g.grid = ChannelGrid(ds.n_antennas, ds.n_subcarriers);
        const std::size_t plane = ds.n_antennas * ds.n_subcarriers;
        for (std::size_t i = 0; i < plane; ++i)
            g.grid.v[i] = {s.x.v[i], s.x.v[plane + i]};
        g.x = s.label[0];
        g.y = s.label[1];
        grids.push_back(std::move(g));
    }
    return grids;
}

// ---- train/test split ----------------------------------------------------------

// Seeded shuffle, then an exact partition: first round(n * fraction) shuffled
// indices train, the rest test.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t n, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0) || !(train_fraction < 1.0))
        throw std::invalid_argument("train fraction must lie strictly between 0 and 1");
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng(mix64(seed) ^ 0x51e05f5ull);
    shuffle(idx, rng);
    const std::size_t n_train = static_cast<std::size_t>(
        std::llround(static_cast<double>(n) * train_fraction));
    std::vector<std::size_t> train(idx.begin(), idx.begin() + std::min(n, n_train));
    std::vector<std::size_t> test(idx.begin() + std::min(n, n_train), idx.end());
    return {std::move(train), std::move(test)};
}

template <typename T>
std::pair<std::vector<T>, std::vector<T>> split(const std::vector<T>& data,
                                                double train_fraction, std::uint64_t seed) {
    auto [train_idx, test_idx] = split_indices(data.size(), train_fraction, seed);
    std::pair<std::vector<T>, std::vector<T>> out;
    out.first.reserve(train_idx.size());
    out.second.reserve(test_idx.size());
    for (auto i : train_idx) out.first.push_back(data[i]);
    for (auto i : test_idx) out.second.push_back(data[i]);
    return out;
}

// ---- trained-state container ----------------------------------------------------

inline constexpr std::uint32_t weights_format_version = 1;

inline void write_state(const TrainState& st, const std::string& path) {
    const Layout lay = make_layout(st.config);
    if (st.params.size() != lay.param_count || st.adam_m.size() != lay.param_count ||
        st.adam_v.size() != lay.param_count)
        throw shape_error("state arrays disagree with network config");

    detail::Writer w(path);
    w.bytes("CSWT", 4);
    w.u32(weights_format_version);
    w.u8(1);
    w.u32(static_cast<std::uint32_t>(st.config.input_channels));
    w.u32(static_cast<std::uint32_t>(st.config.input_rows));
    w.u32(static_cast<std::uint32_t>(st.config.input_cols));
    w.u32(static_cast<std::uint32_t>(st.config.conv.size()));
    for (std::size_t i = 0; i < st.config.conv.size(); ++i) {
        const auto& c = st.config.conv[i];
        w.u32(static_cast<std::uint32_t>(c.kernels));
        w.u32(static_cast<std::uint32_t>(c.kernel_rows));
        w.u32(static_cast<std::uint32_t>(c.kernel_cols));
        w.u8(c.padding == Padding::same ? 0 : 1);
        w.u32(static_cast<std::uint32_t>(c.stride));
        w.u32(static_cast<std::uint32_t>(st.config.pool[i].rows));
        w.u32(static_cast<std::uint32_t>(st.config.pool[i].cols));
    }
    w.u32(static_cast<std::uint32_t>(st.config.dense.size()));
    for (std::size_t d : st.config.dense) w.u32(static_cast<std::uint32_t>(d));
    w.u32(static_cast<std::uint32_t>(st.norm.planes.size()));
    for (const auto& p : st.norm.planes) {
        w.u8(static_cast<std::uint8_t>(p.semantic));
        w.f64(p.min);
        w.f64(p.max);
    }
    w.u64(st.adam_step);
    w.u64(st.epochs_done);
    w.u64(st.seed);
    w.u64(lay.param_count);
    for (double x : st.params) w.f64(x);
    for (double x : st.adam_m) w.f64(x);
    for (double x : st.adam_v) w.f64(x);
}

inline TrainState read_state(const std::string& path) {
    detail::Reader r(path);
    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, "CSWT", 4) != 0) throw bad_magic_error("not a weights container");
    const std::uint32_t version = r.u32();
    if (version != weights_format_version)
        throw version_error("unsupported weights version " + std::to_string(version));
    if (r.u8() != 1) throw version_error("unsupported endianness tag");

    TrainState st;
    st.config.input_channels = r.u32();
    st.config.input_rows = r.u32();
    st.config.input_cols = r.u32();
    const std::uint32_t n_conv = r.u32();
    for (std::uint32_t i = 0; i < n_conv; ++i) {
        ConvSpec c;
        c.kernels = r.u32();
        c.kernel_rows = r.u32();
        c.kernel_cols = r.u32();
        c.padding = r.u8() == 0 ? Padding::same : Padding::valid;
        c.stride = r.u32();
        PoolSpec p;
        p.rows = r.u32();
        p.cols = r.u32();
        st.config.conv.push_back(c);
        st.config.pool.push_back(p);
    }
    const std::uint32_t n_dense = r.u32();
    for (std::uint32_t i = 0; i < n_dense; ++i) st.config.dense.push_back(r.u32());
    const std::uint32_t n_norm = r.u32();
    for (std::uint32_t i = 0; i < n_norm; ++i) {
        NormStats::PlaneStat p;
        p.semantic = static_cast<PlaneSemantic>(r.u8());
        p.min = r.f64();
        p.max = r.f64();
        st.norm.planes.push_back(p);
    }
    st.adam_step = r.u64();
    st.epochs_done = r.u64();
    st.seed = r.u64();
    const std::uint64_t param_count = r.u64();
    const Layout lay = make_layout(st.config);
    if (param_count != lay.param_count)
        throw shape_error("declared parameter count disagrees with network config");
    st.params.resize(param_count);
    st.adam_m.resize(param_count);
    st.adam_v.resize(param_count);
    for (double& x : st.params) x = r.f64();
    for (double& x : st.adam_m) x = r.f64();
    for (double& x : st.adam_v) x = r.f64();
    r.expect_eof();
    return st;
}

// ---- alignment-fit container -----------------------------------------------------

inline void write_fit(const AlignmentFit& fit, const std::string& path) {
    detail::Writer w(path);
    w.bytes("CSFT", 4);
    w.u32(1);
    w.u64(fit.slope_per_antenna.size());
    for (double x : fit.slope_per_antenna) w.f64(x);
    for (double x : fit.intercept_per_antenna) w.f64(x);
    w.f64(fit.slope);
    w.f64(fit.intercept);
}

inline AlignmentFit read_fit(const std::string& path) {
    detail::Reader r(path);
    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, "CSFT", 4) != 0) throw bad_magic_error("not a fit container");
    if (r.u32() != 1) throw version_error("unsupported fit version");
    AlignmentFit fit;
    const std::uint64_t n = r.u64();
    fit.slope_per_antenna.resize(n);
    fit.intercept_per_antenna.resize(n);
    for (double& x : fit.slope_per_antenna) x = r.f64();
    for (double& x : fit.intercept_per_antenna) x = r.f64();
    fit.slope = r.f64();
    fit.intercept = r.f64();
    r.expect_eof();
    return fit;
}

// ---- results CSV --------------------------------------------------------------

struct ResultRow {
    std::string recipe;
    std::string pooling;   // "p_ant x p_sc", e.g. "1x4"
    std::string geometry;  // "ula" / "ura" / "dis"
    std::uint64_t seed = 0;
    std::string config_hash;
    double me_m = 0.0;
    double wall_seconds = 0.0;
};

// One data line per experiment, sorted for order-independent aggregation.
// ME is printed with 6 significant digits; wall-clock is the only
// non-reproducible column and comes last.
inline void write_results(std::vector<ResultRow> rows, const std::string& path) {
    std::sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
        return std::tie(a.recipe, a.pooling, a.geometry, a.seed) <
               std::tie(b.recipe, b.pooling, b.geometry, b.seed);
    });
    std::ofstream out(path);
    if (!out) throw io_error("cannot open for writing: " + path);
    out << "recipe,pooling,geometry,seed,config_hash,me_m,wall_seconds\n";
    char buf[128];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%.6g,%.3f", r.me_m, r.wall_seconds);
        out << r.recipe << ',' << r.pooling << ',' << r.geometry << ',' << r.seed << ','
            << r.config_hash << ',' << buf << '\n';
    }
    if (!out) throw io_error("write failed: " + path);
}

}  // namespace csiloc
