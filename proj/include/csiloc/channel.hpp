#pragma once

#include <algorithm>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "csiloc/common.hpp"

namespace csiloc {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;
};

inline Vec3 operator-(const Vec3& a, const Vec3& b) {
    return {a.x - b.x, a.y - b.y, a.z - b.z};
}

inline double norm(const Vec3& v) {
    return std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z);
}

inline double distance(const Vec3& a, const Vec3& b) { return norm(a - b); }

enum class ArrayKind { ula, ura, distributed };

inline std::string to_string(ArrayKind k) {
    switch (k) {
        case ArrayKind::ula: return "ula";
        case ArrayKind::ura: return "ura";
        case ArrayKind::distributed: return "dis";
    }
    return "?";
}

// Receive array: element positions in meters, row order is the antenna order
// of all downstream matrices.
struct ArrayGeometry {
    ArrayKind kind = ArrayKind::ula;
    std::vector<Vec3> elements;

    std::size_t n_antennas() const { return elements.size(); }

    static ArrayGeometry make_ula(std::size_t count, double spacing,
                                  Vec3 origin, Vec3 axis = {1.0, 0.0, 0.0}) {
        if (count == 0) throw std::invalid_argument("ULA needs at least one element");
        const double a = norm(axis);
        if (a <= 0.0) throw std::invalid_argument("ULA axis must be nonzero");
        ArrayGeometry g;
        g.kind = ArrayKind::ula;
        g.elements.reserve(count);
        for (std::size_t i = 0; i < count; ++i) {
            const double t = spacing * static_cast<double>(i) / a;
            g.elements.push_back({origin.x + axis.x * t, origin.y + axis.y * t,
                                  origin.z + axis.z * t});
        }
        return g;
    }

    // Rectangular grid spanning the col_axis x row_axis plane; element order
    // is row-major over the grid.
    static ArrayGeometry make_ura(std::size_t rows, std::size_t cols, double spacing,
                                  Vec3 origin, Vec3 col_axis = {1.0, 0.0, 0.0},
                                  Vec3 row_axis = {0.0, 0.0, 1.0}) {
        if (rows == 0 || cols == 0) throw std::invalid_argument("URA needs a nonempty grid");
        ArrayGeometry g;
        g.kind = ArrayKind::ura;
        g.elements.reserve(rows * cols);
        const double ca = norm(col_axis), ra = norm(row_axis);
        if (ca <= 0.0 || ra <= 0.0) throw std::invalid_argument("URA axes must be nonzero");
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c) {
                const double tr = spacing * static_cast<double>(r) / ra;
                const double tc = spacing * static_cast<double>(c) / ca;
                g.elements.push_back({origin.x + col_axis.x * tc + row_axis.x * tr,
                                      origin.y + col_axis.y * tc + row_axis.y * tr,
                                      origin.z + col_axis.z * tc + row_axis.z * tr});
            }
        }
        return g;
    }

    struct SubUla {
        std::size_t count;
        double spacing;
        Vec3 origin;
        Vec3 axis;
    };

    static ArrayGeometry make_distributed(const std::vector<SubUla>& subs) {
        if (subs.empty()) throw std::invalid_argument("distributed array needs sub-arrays");
        ArrayGeometry g;
        g.kind = ArrayKind::distributed;
        for (const auto& s : subs) {
            auto sub = make_ula(s.count, s.spacing, s.origin, s.axis);
            g.elements.insert(g.elements.end(), sub.elements.begin(), sub.elements.end());
        }
        return g;
    }

    void validate() const {
        if (elements.empty()) throw std::invalid_argument("geometry has no elements");
        for (const auto& e : elements) {
            if (!std::isfinite(e.x) || !std::isfinite(e.y) || !std::isfinite(e.z))
                throw std::invalid_argument("geometry has non-finite element position");
        }
        for (std::size_t i = 0; i < elements.size(); ++i) {
            for (std::size_t j = i + 1; j < elements.size(); ++j) {
                if (distance(elements[i], elements[j]) < 1e-12)
                    throw std::invalid_argument("geometry has duplicate element positions");
            }
        }
    }
};

struct Path {
    enum class Kind { los, scatterer };
    Kind kind = Kind::los;
    Vec3 scatter_point{};                    // used when kind == scatterer
    std::complex<double> gain{1.0, 0.0};
};

struct Rect {
    double x0 = 0.0, y0 = 0.0, width = 0.0, height = 0.0;

    bool contains(double x, double y) const {
        return x >= x0 - 1e-12 && x <= x0 + width + 1e-12 &&
               y >= y0 - 1e-12 && y <= y0 + height + 1e-12;
    }
};

struct SceneConfig {
    double carrier_hz = 2.61e9;
    double bandwidth_hz = 20e6;
    std::size_t n_subcarriers = 64;
    std::vector<Path> paths;
    Rect area{0.0, 0.0, 0.5, 0.5};
    double grid_spacing = 0.025;
    double ue_height = 0.0;  // UE positions are 2-D; lifted to this z

    // Absolute frequency of subcarrier n: carrier-centered grid with
    // spacing bandwidth / n_subcarriers. Well-defined for a single subcarrier.
    double subcarrier_freq(std::size_t n) const {
        const double df = bandwidth_hz / static_cast<double>(n_subcarriers);
        const double centered =
            static_cast<double>(n) - 0.5 * static_cast<double>(n_subcarriers - 1);
        return carrier_hz + centered * df;
    }

    void validate() const {
        if (n_subcarriers < 2) throw std::invalid_argument("scene needs at least 2 subcarriers");
        if (!(bandwidth_hz > 0.0)) throw std::invalid_argument("bandwidth must be positive");
        if (paths.empty()) throw std::invalid_argument("scene needs at least one path");
        for (const auto& p : paths) {
            if (!(std::abs(p.gain) > 0.0)) throw std::invalid_argument("path gain must be nonzero");
        }
        if (!(grid_spacing > 0.0)) throw std::invalid_argument("grid spacing must be positive");
        if (!(area.width > 0.0) && !(area.height > 0.0))
            throw std::invalid_argument("area must be nonempty");
    }
};

// One SIMO-OFDM snapshot: complex N_R x N_C matrix, antennas on the first
// axis, subcarriers on the second, stored row-major.
struct ChannelGrid {
    std::size_t n_antennas = 0;
    std::size_t n_subcarriers = 0;
    std::vector<std::complex<double>> v;

    ChannelGrid() = default;
    ChannelGrid(std::size_t antennas, std::size_t subcarriers)
        : n_antennas(antennas), n_subcarriers(subcarriers), v(antennas * subcarriers) {}

    std::complex<double>& at(std::size_t antenna, std::size_t subcarrier) {
        return v[antenna * n_subcarriers + subcarrier];
    }
    const std::complex<double>& at(std::size_t antenna, std::size_t subcarrier) const {
        return v[antenna * n_subcarriers + subcarrier];
    }
};

// Hardware phase offset terms. tau_p and tau_s both multiply the subcarrier
// index; they are kept separate to mirror how the offsets arise (symbol
// timing vs sampling timing), but only their sum affects the output.
struct ImpairmentParams {
    double tau_p = 0.0;        // rad per subcarrier
    double tau_s = 0.0;        // rad per subcarrier
    double tau_c = 0.0;        // rad
    double beta = 0.0;         // rad
    double noise_sigma = 0.0;  // rad, std of per-entry phase noise

    void validate() const {
        for (double x : {tau_p, tau_s, tau_c, beta, noise_sigma}) {
            if (!std::isfinite(x)) throw std::invalid_argument("impairment parameter not finite");
        }
        if (noise_sigma < 0.0) throw std::invalid_argument("noise_sigma must be >= 0");
    }
};

struct Interval {
    double lo = 0.0, hi = 0.0;

    void validate() const {
        if (!std::isfinite(lo) || !std::isfinite(hi))
            throw std::invalid_argument("interval bounds must be finite");
        if (lo > hi) throw std::invalid_argument("interval lower bound exceeds upper bound");
    }
};

struct ImpairmentRanges {
    Interval tau_p{};
    Interval tau_s{};
    Interval tau_c{};
    Interval beta{};
    Interval noise_sigma{};

    void validate() const {
        tau_p.validate();
        tau_s.validate();
        tau_c.validate();
        beta.validate();
        noise_sigma.validate();
        if (noise_sigma.lo < 0.0) throw std::invalid_argument("noise_sigma range must be >= 0");
    }
};

// Geometric multipath evaluation: entry (k, n) sums gain * exp(-j 2 pi f_n
// d_pk / c) over paths, d_pk the UE -> (scatterer ->) antenna-k path length.
inline ChannelGrid generate_clean_channel(const ArrayGeometry& geometry,
                                          const SceneConfig& scene, double ue_x,
                                          double ue_y) {
    geometry.validate();
    if (scene.paths.empty()) throw std::invalid_argument("scene has no paths");
    if (scene.n_subcarriers == 0) throw std::invalid_argument("scene has no subcarriers");
    if (!scene.area.contains(ue_x, ue_y))
        throw std::invalid_argument("UE position outside scene area");

    const Vec3 ue{ue_x, ue_y, scene.ue_height};
    const std::size_t n_r = geometry.n_antennas();
    const std::size_t n_c = scene.n_subcarriers;

    ChannelGrid grid(n_r, n_c);
    std::vector<double> freq(n_c);
    for (std::size_t n = 0; n < n_c; ++n) freq[n] = scene.subcarrier_freq(n);

    for (const auto& path : scene.paths) {
        const double d_to_scatter =
            path.kind == Path::Kind::scatterer ? distance(ue, path.scatter_point) : 0.0;
        for (std::size_t k = 0; k < n_r; ++k) {
            const double d = path.kind == Path::Kind::los
                                 ? distance(ue, geometry.elements[k])
                                 : d_to_scatter + distance(path.scatter_point, geometry.elements[k]);
            for (std::size_t n = 0; n < n_c; ++n) {
                const double phase = -two_pi * freq[n] * d / speed_of_light;
                grid.at(k, n) += path.gain * std::polar(1.0, phase);
            }
        }
    }
    return grid;
}

// Uniform draws within the given ranges; draw order is fixed (tau_p, tau_s,
// tau_c, beta, noise_sigma) so results are reproducible per seed.
inline ImpairmentParams sample_impairments(std::uint64_t seed, const ImpairmentRanges& ranges) {
    ranges.validate();
    Rng rng(seed);
    ImpairmentParams p;
    p.tau_p = rng.uniform(ranges.tau_p.lo, ranges.tau_p.hi);
    p.tau_s = rng.uniform(ranges.tau_s.lo, ranges.tau_s.hi);
    p.tau_c = rng.uniform(ranges.tau_c.lo, ranges.tau_c.hi);
    p.beta = rng.uniform(ranges.beta.lo, ranges.beta.hi);
    p.noise_sigma = rng.uniform(ranges.noise_sigma.lo, ranges.noise_sigma.hi);
    return p;
}

// Rotates each entry by (tau_p + tau_s) n + tau_c + beta plus optional i.i.d.
// Gaussian phase noise. The deterministic part is identical across antennas
// (one oscillator feeds the whole array); magnitudes are preserved.
inline ChannelGrid apply_impairments(const ChannelGrid& clean, const ImpairmentParams& params,
                                     std::uint64_t rng_seed) {
    params.validate();
    ChannelGrid out = clean;
    const double slope = params.tau_p + params.tau_s;
    const double offset = params.tau_c + params.beta;

    if (params.noise_sigma == 0.0) {
        for (std::size_t k = 0; k < out.n_antennas; ++k)
            for (std::size_t n = 0; n < out.n_subcarriers; ++n)
                out.at(k, n) *= std::polar(1.0, slope * static_cast<double>(n) + offset);
        return out;
    }

    Rng rng(rng_seed);
    for (std::size_t k = 0; k < out.n_antennas; ++k) {
        for (std::size_t n = 0; n < out.n_subcarriers; ++n) {
            const double eps = params.noise_sigma * rng.normal();
            out.at(k, n) *= std::polar(1.0, slope * static_cast<double>(n) + offset + eps);
        }
    }
    return out;
}

struct LabeledGrid {
    ChannelGrid grid;
    double x = 0.0, y = 0.0;  // generating UE position, meters
};

// UE positions on the inclusive grid defined by area and grid_spacing.
inline std::vector<std::pair<double, double>> grid_positions(const Rect& area, double spacing) {
    if (!(spacing > 0.0)) throw std::invalid_argument("grid spacing must be positive");
    const std::size_t nx = static_cast<std::size_t>(std::floor(area.width / spacing + 1e-9)) + 1;
    const std::size_t ny = static_cast<std::size_t>(std::floor(area.height / spacing + 1e-9)) + 1;
    std::vector<std::pair<double, double>> pos;
    pos.reserve(nx * ny);
    for (std::size_t iy = 0; iy < ny; ++iy)
        for (std::size_t ix = 0; ix < nx; ++ix)
            pos.emplace_back(area.x0 + static_cast<double>(ix) * spacing,
                             area.y0 + static_cast<double>(iy) * spacing);
    return pos;
}

// Grid-sampled positions, snapshot_count snapshots each with independently
// sampled impairments. Labels are the exact generating positions.
inline std::vector<LabeledGrid> generate_dataset(const ArrayGeometry& geometry,
                                                 const SceneConfig& scene,
                                                 std::size_t snapshot_count,
                                                 const ImpairmentRanges& ranges,
                                                 std::uint64_t seed) {
    if (snapshot_count == 0) throw std::invalid_argument("snapshot_count must be positive");
    ranges.validate();
    const auto positions = grid_positions(scene.area, scene.grid_spacing);
    if (positions.empty()) throw std::invalid_argument("sampling grid has no positions");

    SeedStream seeds(seed);
    std::vector<LabeledGrid> out;
    out.reserve(positions.size() * snapshot_count);
    for (const auto& [px, py] : positions) {
        const ChannelGrid clean = generate_clean_channel(geometry, scene, px, py);
        for (std::size_t s = 0; s < snapshot_count; ++s) {
            const std::uint64_t param_seed = seeds.next();
            const std::uint64_t noise_seed = seeds.next();
            const ImpairmentParams params = sample_impairments(param_seed, ranges);
            out.push_back({apply_impairments(clean, params, noise_seed), px, py});
        }
    }
    return out;
}

}  // namespace csiloc
