#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "csiloc/channel.hpp"
#include "csiloc/common.hpp"

namespace csiloc {

enum class PlaneSemantic : std::uint8_t {
    magnitude = 0,
    phase_raw = 1,
    phase_difference = 2,
    phase_aligned = 3,
    phase_sin = 4,
    phase_cos = 5,
    real_part = 6,
    imag_part = 7,
    phase_unwrapped = 8,
};

inline bool is_phase_semantic(PlaneSemantic s) {
    return s == PlaneSemantic::phase_raw || s == PlaneSemantic::phase_difference ||
           s == PlaneSemantic::phase_aligned || s == PlaneSemantic::phase_unwrapped;
}

inline std::string to_string(PlaneSemantic s) {
    switch (s) {
        case PlaneSemantic::magnitude: return "magnitude";
        case PlaneSemantic::phase_raw: return "phase_raw";
        case PlaneSemantic::phase_difference: return "phase_difference";
        case PlaneSemantic::phase_aligned: return "phase_aligned";
        case PlaneSemantic::phase_sin: return "phase_sin";
        case PlaneSemantic::phase_cos: return "phase_cos";
        case PlaneSemantic::real_part: return "real_part";
        case PlaneSemantic::imag_part: return "imag_part";
        case PlaneSemantic::phase_unwrapped: return "phase_unwrapped";
    }
    return "?";
}

// One real N_R x N_C plane, antennas on the first axis.
struct FingerprintPlane {
    std::size_t n_antennas = 0;
    std::size_t n_subcarriers = 0;
    PlaneSemantic semantic = PlaneSemantic::magnitude;
    std::vector<double> v;

    FingerprintPlane() = default;
    FingerprintPlane(std::size_t antennas, std::size_t subcarriers, PlaneSemantic sem)
        : n_antennas(antennas), n_subcarriers(subcarriers), semantic(sem),
          v(antennas * subcarriers) {}

    double& at(std::size_t antenna, std::size_t subcarrier) {
        return v[antenna * n_subcarriers + subcarrier];
    }
    double at(std::size_t antenna, std::size_t subcarrier) const {
        return v[antenna * n_subcarriers + subcarrier];
    }
};

// Stack of 1-3 planes fed to the network as input channels.
struct FingerprintTensor {
    std::vector<FingerprintPlane> planes;
    std::string recipe;

    void validate() const {
        if (planes.empty() || planes.size() > 3)
            throw std::invalid_argument("tensor must hold 1 to 3 planes");
        for (const auto& p : planes) {
            if (p.n_antennas != planes[0].n_antennas ||
                p.n_subcarriers != planes[0].n_subcarriers)
                throw std::invalid_argument("tensor planes must share one shape");
        }
    }
};

// ---- element-wise extraction -----------------------------------------------

inline FingerprintPlane magnitude_of(const ChannelGrid& h, PlaneSemantic sem = PlaneSemantic::magnitude) {
    FingerprintPlane p(h.n_antennas, h.n_subcarriers, sem);
    for (std::size_t i = 0; i < h.v.size(); ++i) p.v[i] = std::abs(h.v[i]);
    return p;
}

inline FingerprintPlane angle_of(const ChannelGrid& h, PlaneSemantic sem = PlaneSemantic::phase_raw) {
    FingerprintPlane p(h.n_antennas, h.n_subcarriers, sem);
    for (std::size_t i = 0; i < h.v.size(); ++i) p.v[i] = wrap_pi(std::arg(h.v[i]));
    return p;
}

inline FingerprintPlane real_of(const ChannelGrid& h) {
    FingerprintPlane p(h.n_antennas, h.n_subcarriers, PlaneSemantic::real_part);
    for (std::size_t i = 0; i < h.v.size(); ++i) p.v[i] = h.v[i].real();
    return p;
}

inline FingerprintPlane imag_of(const ChannelGrid& h) {
    FingerprintPlane p(h.n_antennas, h.n_subcarriers, PlaneSemantic::imag_part);
    for (std::size_t i = 0; i < h.v.size(); ++i) p.v[i] = h.v[i].imag();
    return p;
}

// ---- phase difference -------------------------------------------------------

// H_D: phase becomes the wrapped difference between adjacent antennas per
// subcarrier, the wrap-around pair (last, first) included via the modulo.
// Antenna-common phase offsets cancel in the difference; magnitude is kept.
inline ChannelGrid phase_difference(const ChannelGrid& h) {
    if (h.n_antennas == 0) throw std::invalid_argument("empty channel grid");
    ChannelGrid out(h.n_antennas, h.n_subcarriers);
    for (std::size_t k = 0; k < h.n_antennas; ++k) {
        const std::size_t k_next = (k + 1) % h.n_antennas;
        for (std::size_t n = 0; n < h.n_subcarriers; ++n) {
            const double d = wrap_pi(std::arg(h.at(k, n)) - std::arg(h.at(k_next, n)));
            out.at(k, n) = std::polar(std::abs(h.at(k, n)), d);
        }
    }
    return out;
}

// ---- unwrap ------------------------------------------------------------------

enum class UnwrapAxis { subcarrier, antenna };

// Maps a value into (-pi, pi]; the adjustment applied to successive
// differences during unwrapping.
inline double wrap_diff(double x) {
    double w = wrap_pi(x);
    if (w == -pi) w = pi;
    return w;
}

inline void unwrap_inplace(double* data, std::size_t count, std::size_t stride) {
    // accumulate whole turns so sequences without wraps pass through
    // bit-identically
    double prev_raw = count > 0 ? data[0] : 0.0;
    long turns = 0;
    for (std::size_t i = 1; i < count; ++i) {
        const double cur = data[i * stride];
        const double d = cur - prev_raw;
        const double adjusted = wrap_diff(d);
        turns += std::lround((adjusted - d) / two_pi);
        prev_raw = cur;
        data[i * stride] = cur + two_pi * static_cast<double>(turns);
    }
}

// Standard 1-D unwrap along the chosen axis; output values are unbounded.
inline FingerprintPlane unwrap_1d(const FingerprintPlane& plane, UnwrapAxis axis) {
    if (!is_phase_semantic(plane.semantic))
        throw std::invalid_argument("unwrap_1d expects a phase-semantic plane");
    FingerprintPlane out = plane;
    out.semantic = PlaneSemantic::phase_unwrapped;
    if (axis == UnwrapAxis::subcarrier) {
        for (std::size_t k = 0; k < out.n_antennas; ++k)
            unwrap_inplace(out.v.data() + k * out.n_subcarriers, out.n_subcarriers, 1);
    } else {
        for (std::size_t n = 0; n < out.n_subcarriers; ++n)
            unwrap_inplace(out.v.data() + n, out.n_antennas, out.n_subcarriers);
    }
    return out;
}

// ---- phase alignment ---------------------------------------------------------

// Per-antenna least-squares line through the unwrapped subcarrier phases,
// plus the shared reference (slope = mean of per-antenna slopes, intercept =
// intercept of antenna 0).
struct AlignmentFit {
    std::vector<double> slope_per_antenna;      // rad per subcarrier
    std::vector<double> intercept_per_antenna;  // rad
    double slope = 0.0;
    double intercept = 0.0;
};

inline AlignmentFit fit_alignment(const ChannelGrid& h) {
    if (h.n_subcarriers < 2)
        throw std::invalid_argument("alignment fit needs at least 2 subcarriers");
    const std::size_t n_r = h.n_antennas;
    const std::size_t n_c = h.n_subcarriers;

    AlignmentFit fit;
    fit.slope_per_antenna.resize(n_r);
    fit.intercept_per_antenna.resize(n_r);

    const double nc = static_cast<double>(n_c);
    const double x_mean = 0.5 * (nc - 1.0);
    const double sxx = nc * (nc * nc - 1.0) / 12.0;

    std::vector<double> phases(n_c);
    for (std::size_t k = 0; k < n_r; ++k) {
        for (std::size_t n = 0; n < n_c; ++n) phases[n] = wrap_pi(std::arg(h.at(k, n)));
        unwrap_inplace(phases.data(), n_c, 1);

        double y_mean = 0.0;
        for (double p : phases) y_mean += p;
        y_mean /= nc;
        double sxy = 0.0;
        for (std::size_t n = 0; n < n_c; ++n)
            sxy += (static_cast<double>(n) - x_mean) * (phases[n] - y_mean);

        fit.slope_per_antenna[k] = sxy / sxx;
        fit.intercept_per_antenna[k] = y_mean - fit.slope_per_antenna[k] * x_mean;
    }

    double slope_sum = 0.0;
    for (double s : fit.slope_per_antenna) slope_sum += s;
    fit.slope = slope_sum / static_cast<double>(n_r);
    fit.intercept = fit.intercept_per_antenna[0];
    return fit;
}

// H_A: one shared rotation exp(-j (slope n + intercept)) applied to every
// antenna, so inter-antenna phase relations (the AoA structure) survive.
inline ChannelGrid phase_alignment(const ChannelGrid& h, const AlignmentFit& fit) {
    ChannelGrid out(h.n_antennas, h.n_subcarriers);
    for (std::size_t k = 0; k < h.n_antennas; ++k)
        for (std::size_t n = 0; n < h.n_subcarriers; ++n)
            out.at(k, n) = h.at(k, n) *
                           std::polar(1.0, -(fit.slope * static_cast<double>(n) + fit.intercept));
    return out;
}

inline ChannelGrid phase_alignment(const ChannelGrid& h) {
    return phase_alignment(h, fit_alignment(h));
}

// H_A': the earlier per-antenna calibration used as a baseline. Slope from
// the first/last subcarrier difference, offset as the mean phase, estimated
// and removed independently per antenna; this flattens each antenna's phase
// but also destroys the inter-antenna offsets.
inline ChannelGrid phase_alignment_per_antenna(const ChannelGrid& h) {
    if (h.n_subcarriers < 2)
        throw std::invalid_argument("per-antenna alignment needs at least 2 subcarriers");
    const std::size_t n_c = h.n_subcarriers;
    ChannelGrid out(h.n_antennas, n_c);
    std::vector<double> phases(n_c);
    for (std::size_t k = 0; k < h.n_antennas; ++k) {
        for (std::size_t n = 0; n < n_c; ++n) phases[n] = wrap_pi(std::arg(h.at(k, n)));
        unwrap_inplace(phases.data(), n_c, 1);
        const double slope =
            (phases[n_c - 1] - phases[0]) / static_cast<double>(n_c - 1);
        double offset = 0.0;
        for (double p : phases) offset += p;
        offset /= static_cast<double>(n_c);
        for (std::size_t n = 0; n < n_c; ++n)
            out.at(k, n) = h.at(k, n) *
                           std::polar(1.0, -(slope * static_cast<double>(n) + offset));
    }
    return out;
}

// ---- wrap encoding -----------------------------------------------------------

// sin/cos planes of a phase plane: continuous across the +-pi boundary.
inline std::pair<FingerprintPlane, FingerprintPlane> wrap_encode(const FingerprintPlane& phase) {
    if (!is_phase_semantic(phase.semantic))
        throw std::invalid_argument("wrap_encode expects a phase-semantic plane");
    FingerprintPlane s(phase.n_antennas, phase.n_subcarriers, PlaneSemantic::phase_sin);
    FingerprintPlane c(phase.n_antennas, phase.n_subcarriers, PlaneSemantic::phase_cos);
    for (std::size_t i = 0; i < phase.v.size(); ++i) {
        s.v[i] = std::sin(phase.v[i]);
        c.v[i] = std::cos(phase.v[i]);
    }
    return {std::move(s), std::move(c)};
}

// ---- recipe registry ---------------------------------------------------------

namespace detail {

enum class BaseTransform { raw, difference, aligned, aligned_per_antenna };

inline ChannelGrid apply_base(const ChannelGrid& h, BaseTransform t) {
    switch (t) {
        case BaseTransform::raw: return h;
        case BaseTransform::difference: return phase_difference(h);
        case BaseTransform::aligned: return phase_alignment(h);
        case BaseTransform::aligned_per_antenna: return phase_alignment_per_antenna(h);
    }
    throw std::logic_error("unreachable");
}

enum class Extract { magnitude, angle, real, imag, sin_angle, cos_angle };

struct RecipeDef {
    BaseTransform base;
    std::vector<Extract> extracts;
};

inline const std::vector<std::pair<std::string, RecipeDef>>& recipe_table() {
    using B = BaseTransform;
    using E = Extract;
    static const std::vector<std::pair<std::string, RecipeDef>> table = {
        {"mag", {B::raw, {E::magnitude}}},
        {"rawphase", {B::raw, {E::angle}}},
        {"dphase", {B::difference, {E::angle}}},
        {"aphase", {B::aligned, {E::angle}}},
        {"aphase-per-ant", {B::aligned_per_antenna, {E::angle}}},
        {"mag+rawphase", {B::raw, {E::magnitude, E::angle}}},
        {"mag_d+dphase", {B::difference, {E::magnitude, E::angle}}},
        {"mag_a+aphase", {B::aligned, {E::magnitude, E::angle}}},
        {"re+im", {B::raw, {E::real, E::imag}}},
        {"re_d+im_d", {B::difference, {E::real, E::imag}}},
        {"re_a+im_a", {B::aligned, {E::real, E::imag}}},
        {"sin_d+cos_d", {B::difference, {E::sin_angle, E::cos_angle}}},
        {"mag+sin+cos", {B::raw, {E::magnitude, E::sin_angle, E::cos_angle}}},
        {"mag_a+sin_a+cos_a", {B::aligned, {E::magnitude, E::sin_angle, E::cos_angle}}},
        {"mag_d+sin_d+cos_d", {B::difference, {E::magnitude, E::sin_angle, E::cos_angle}}},
    };
    return table;
}

inline PlaneSemantic angle_semantic(BaseTransform t) {
    switch (t) {
        case BaseTransform::raw: return PlaneSemantic::phase_raw;
        case BaseTransform::difference: return PlaneSemantic::phase_difference;
        case BaseTransform::aligned:
        case BaseTransform::aligned_per_antenna: return PlaneSemantic::phase_aligned;
    }
    throw std::logic_error("unreachable");
}

}  // namespace detail

inline std::vector<std::string> recipe_names() {
    std::vector<std::string> names;
    for (const auto& [name, def] : detail::recipe_table()) names.push_back(name);
    return names;
}

inline bool is_known_recipe(const std::string& name) {
    for (const auto& [n, def] : detail::recipe_table())
        if (n == name) return true;
    return false;
}

// Plane count of a recipe without building anything.
inline std::size_t recipe_plane_count(const std::string& name) {
    for (const auto& [n, def] : detail::recipe_table())
        if (n == name) return def.extracts.size();
    throw std::invalid_argument("unknown recipe: " + name);
}

// Builds the named input combination: base transform first, then per-plane
// extraction.
inline FingerprintTensor build_tensor(const ChannelGrid& h, const std::string& recipe) {
    const detail::RecipeDef* def = nullptr;
    for (const auto& [n, d] : detail::recipe_table()) {
        if (n == recipe) {
            def = &d;
            break;
        }
    }
    if (def == nullptr) throw std::invalid_argument("unknown recipe: " + recipe);

    const ChannelGrid base = detail::apply_base(h, def->base);
    const PlaneSemantic angle_sem = detail::angle_semantic(def->base);

    FingerprintTensor t;
    t.recipe = recipe;
    for (const auto extract : def->extracts) {
        switch (extract) {
            case detail::Extract::magnitude: t.planes.push_back(magnitude_of(base)); break;
            case detail::Extract::angle: t.planes.push_back(angle_of(base, angle_sem)); break;
            case detail::Extract::real: t.planes.push_back(real_of(base)); break;
            case detail::Extract::imag: t.planes.push_back(imag_of(base)); break;
            case detail::Extract::sin_angle:
                t.planes.push_back(wrap_encode(angle_of(base, angle_sem)).first);
                break;
            case detail::Extract::cos_angle:
                t.planes.push_back(wrap_encode(angle_of(base, angle_sem)).second);
                break;
        }
    }
    t.validate();
    return t;
}

}  // namespace csiloc
