#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "csiloc/channel.hpp"
#include "csiloc/nn.hpp"
#include "csiloc/train.hpp"

namespace csiloc {

using json = nlohmann::json;

struct UlaSpec {
    std::size_t antennas = 8;
    double spacing = 0.07;
    Vec3 origin{0.005, -1.0, 0.0};
    Vec3 axis{1.0, 0.0, 0.0};
};

struct UraSpec {
    std::size_t rows = 4, cols = 4;
    double spacing = 0.07;
    Vec3 origin{0.145, -1.0, -0.105};
    Vec3 col_axis{1.0, 0.0, 0.0};
    Vec3 row_axis{0.0, 0.0, 1.0};
};

struct GeometryConfig {
    ArrayKind kind = ArrayKind::ula;
    UlaSpec ula;
    UraSpec ura;
    std::vector<ArrayGeometry::SubUla> dis;

    ArrayGeometry build() const {
        switch (kind) {
            case ArrayKind::ula:
                return ArrayGeometry::make_ula(ula.antennas, ula.spacing, ula.origin, ula.axis);
            case ArrayKind::ura:
                return ArrayGeometry::make_ura(ura.rows, ura.cols, ura.spacing, ura.origin,
                                               ura.col_axis, ura.row_axis);
            case ArrayKind::distributed:
                return ArrayGeometry::make_distributed(dis);
        }
        throw std::logic_error("unreachable");
    }
};

struct ExperimentConfig {
    std::vector<std::string> recipes = {"mag", "rawphase", "dphase", "aphase", "aphase-per-ant"};
    std::vector<PoolSpec> pools = {{1, 4}, {2, 2}, {4, 1}};
    std::vector<std::size_t> psc_values = {1, 2, 4, 8};
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    std::vector<std::string> geometries = {"ula", "ura", "dis"};
    double train_fraction = 0.8;
};

struct Config {
    SceneConfig scene;
    GeometryConfig geometry;  // used by gen / train / compare-recipes
    std::map<std::string, GeometryConfig> geometry_presets;  // compare-pooling / sweep-psc
    ImpairmentRanges impairments;
    std::size_t snapshots_per_position = 1;
    NetworkConfig network;  // input dims filled from data at run time
    TrainSchedule schedule = TrainSchedule::staged(false);
    ExperimentConfig experiment;
    std::string hash;  // of the resolved configuration

    static Config defaults();
};

inline PoolSpec parse_pool(const std::string& s) {
    const auto x = s.find('x');
    if (x == std::string::npos || x == 0 || x + 1 >= s.size())
        throw std::invalid_argument("pool must look like '<p_ant>x<p_sc>', got '" + s + "'");
    PoolSpec p;
    p.rows = static_cast<std::size_t>(std::stoul(s.substr(0, x)));
    p.cols = static_cast<std::size_t>(std::stoul(s.substr(x + 1)));
    if (p.rows == 0 || p.cols == 0) throw std::invalid_argument("pool dims must be >= 1");
    return p;
}

inline std::string pool_to_string(const PoolSpec& p) {
    return std::to_string(p.rows) + "x" + std::to_string(p.cols);
}

inline ArrayKind parse_geometry_kind(const std::string& s) {
    if (s == "ula") return ArrayKind::ula;
    if (s == "ura") return ArrayKind::ura;
    if (s == "dis") return ArrayKind::distributed;
    throw std::invalid_argument("geometry must be one of ula/ura/dis, got '" + s + "'");
}

// ---- defaults -----------------------------------------------------------------

// Desk-scale scene: 8-antenna ULA one meter south of a 0.5 x 0.5 m area
// sampled on a 25 mm grid, 64 subcarriers over 20 MHz, one LOS path and two
// scatterers whose combined gain stays below the LOS gain (no deep fades).
// The carrier sits at 433 MHz so the grid samples the phase map at ~lambda/28;
// at cellular carriers a 25 mm grid is too sparse for a few hundred samples
// to interpolate the fingerprint map.
inline Config Config::defaults() {
    Config c;
    c.scene.carrier_hz = 433e6;
    c.scene.bandwidth_hz = 20e6;
    c.scene.n_subcarriers = 64;
    c.scene.area = {0.0, 0.0, 0.5, 0.5};
    c.scene.grid_spacing = 0.025;
    c.scene.paths = {
        {Path::Kind::los, {}, {1.0, 0.0}},
        {Path::Kind::scatterer, {-0.8, 0.7, 0.25}, std::polar(0.45, 0.4)},
        {Path::Kind::scatterer, {1.4, 1.1, -0.15}, std::polar(0.35, 1.9)},
    };

    c.geometry.kind = ArrayKind::ula;
    c.geometry.ula = UlaSpec{};  // 8 antennas, 70 mm spacing

    // 16-antenna presets sized so both pool stages of any option with
    // p_ant * p_sc = 4 divide evenly
    GeometryConfig ula16;
    ula16.kind = ArrayKind::ula;
    ula16.ula = {16, 0.07, {-0.275, -1.0, 0.0}, {1.0, 0.0, 0.0}};
    GeometryConfig ura16;
    ura16.kind = ArrayKind::ura;
    ura16.ura = UraSpec{};
    GeometryConfig dis16;
    dis16.kind = ArrayKind::distributed;
    dis16.dis = {
        {4, 0.07, {0.145, -1.0, 0.0}, {1.0, 0.0, 0.0}},
        {4, 0.07, {0.145, 1.5, 0.0}, {1.0, 0.0, 0.0}},
        {4, 0.07, {-1.0, 0.145, 0.0}, {0.0, 1.0, 0.0}},
        {4, 0.07, {1.5, 0.145, 0.0}, {0.0, 1.0, 0.0}},
    };
    c.geometry_presets = {{"ula", ula16}, {"ura", ura16}, {"dis", dis16}};

    c.impairments.tau_p = {-0.15, 0.15};
    c.impairments.tau_s = {-0.10, 0.10};
    c.impairments.tau_c = {-pi, pi};
    c.impairments.beta = {-pi, pi};
    c.impairments.noise_sigma = {0.05, 0.05};

    c.snapshots_per_position = 1;

    c.network.conv = {{32, 4, 4, Padding::same, 1}, {32, 4, 4, Padding::same, 1}};
    c.network.pool = {{2, 2}, {2, 2}};
    c.network.dense = {256, 128, 64, 2};

    c.schedule = TrainSchedule::staged(false);
    return c;
}

// ---- JSON (de)serialization ------------------------------------------------------

namespace detail {

inline Vec3 vec3_from(const json& j) {
    if (!j.is_array() || j.size() != 3) throw std::invalid_argument("expected [x, y, z]");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline json vec3_to(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

inline Interval interval_from(const json& j) {
    if (!j.is_array() || j.size() != 2) throw std::invalid_argument("expected [lo, hi]");
    return {j[0].get<double>(), j[1].get<double>()};
}

inline GeometryConfig geometry_from(const json& j, const GeometryConfig& base) {
    GeometryConfig g = base;
    if (j.contains("kind")) g.kind = parse_geometry_kind(j.at("kind").get<std::string>());
    if (j.contains("antennas")) g.ula.antennas = j.at("antennas").get<std::size_t>();
    if (j.contains("spacing_m")) {
        g.ula.spacing = j.at("spacing_m").get<double>();
        g.ura.spacing = g.ula.spacing;
    }
    if (j.contains("origin")) {
        g.ula.origin = vec3_from(j.at("origin"));
        g.ura.origin = g.ula.origin;
    }
    if (j.contains("axis")) g.ula.axis = vec3_from(j.at("axis"));
    if (j.contains("rows")) g.ura.rows = j.at("rows").get<std::size_t>();
    if (j.contains("cols")) g.ura.cols = j.at("cols").get<std::size_t>();
    if (j.contains("col_axis")) g.ura.col_axis = vec3_from(j.at("col_axis"));
    if (j.contains("row_axis")) g.ura.row_axis = vec3_from(j.at("row_axis"));
    if (j.contains("subarrays")) {
        g.dis.clear();
        for (const auto& s : j.at("subarrays")) {
            ArrayGeometry::SubUla sub;
            sub.count = s.at("antennas").get<std::size_t>();
            sub.spacing = s.at("spacing_m").get<double>();
            sub.origin = vec3_from(s.at("origin"));
            sub.axis = s.contains("axis") ? vec3_from(s.at("axis")) : Vec3{1.0, 0.0, 0.0};
            g.dis.push_back(sub);
        }
    }
    return g;
}

inline json geometry_to(const GeometryConfig& g) {
    json j;
    j["kind"] = to_string(g.kind);
    switch (g.kind) {
        case ArrayKind::ula:
            j["antennas"] = g.ula.antennas;
            j["spacing_m"] = g.ula.spacing;
            j["origin"] = vec3_to(g.ula.origin);
            j["axis"] = vec3_to(g.ula.axis);
            break;
        case ArrayKind::ura:
            j["rows"] = g.ura.rows;
            j["cols"] = g.ura.cols;
            j["spacing_m"] = g.ura.spacing;
            j["origin"] = vec3_to(g.ura.origin);
            j["col_axis"] = vec3_to(g.ura.col_axis);
            j["row_axis"] = vec3_to(g.ura.row_axis);
            break;
        case ArrayKind::distributed: {
            json subs = json::array();
            for (const auto& s : g.dis) {
                subs.push_back({{"antennas", s.count},
                                {"spacing_m", s.spacing},
                                {"origin", vec3_to(s.origin)},
                                {"axis", vec3_to(s.axis)}});
            }
            j["subarrays"] = subs;
            break;
        }
    }
    return j;
}

}  // namespace detail

inline Config config_from_json(const json& j) {
    Config c = Config::defaults();

    if (j.contains("scene")) {
        const auto& s = j.at("scene");
        c.scene.carrier_hz = s.value("carrier_hz", c.scene.carrier_hz);
        c.scene.bandwidth_hz = s.value("bandwidth_hz", c.scene.bandwidth_hz);
        c.scene.n_subcarriers = s.value("subcarriers", c.scene.n_subcarriers);
        c.scene.grid_spacing = s.value("grid_spacing_m", c.scene.grid_spacing);
        c.scene.ue_height = s.value("ue_height_m", c.scene.ue_height);
        if (s.contains("area")) {
            const auto& a = s.at("area");
            c.scene.area = {a.value("x0", 0.0), a.value("y0", 0.0),
                            a.at("width").get<double>(), a.at("height").get<double>()};
        }
        if (s.contains("paths")) {
            c.scene.paths.clear();
            for (const auto& p : s.at("paths")) {
                Path path;
                const std::string kind = p.value("kind", std::string("los"));
                if (kind == "los") {
                    path.kind = Path::Kind::los;
                } else if (kind == "scatterer") {
                    path.kind = Path::Kind::scatterer;
                    path.scatter_point = detail::vec3_from(p.at("position"));
                } else {
                    throw std::invalid_argument("path kind must be los or scatterer");
                }
                if (p.contains("gain")) {
                    const auto& g = p.at("gain");
                    path.gain = {g[0].get<double>(), g[1].get<double>()};
                }
                c.scene.paths.push_back(path);
            }
        }
    }

    if (j.contains("geometry"))
        c.geometry = detail::geometry_from(j.at("geometry"), c.geometry);
    if (j.contains("geometry_presets")) {
        for (const auto& [name, gj] : j.at("geometry_presets").items()) {
            auto it = c.geometry_presets.find(name);
            const GeometryConfig base =
                it != c.geometry_presets.end() ? it->second : GeometryConfig{};
            c.geometry_presets[name] = detail::geometry_from(gj, base);
        }
    }

    if (j.contains("impairments")) {
        const auto& im = j.at("impairments");
        if (im.contains("tau_p")) c.impairments.tau_p = detail::interval_from(im.at("tau_p"));
        if (im.contains("tau_s")) c.impairments.tau_s = detail::interval_from(im.at("tau_s"));
        if (im.contains("tau_c")) c.impairments.tau_c = detail::interval_from(im.at("tau_c"));
        if (im.contains("beta")) c.impairments.beta = detail::interval_from(im.at("beta"));
        if (im.contains("noise_sigma"))
            c.impairments.noise_sigma = detail::interval_from(im.at("noise_sigma"));
    }

    c.snapshots_per_position = j.value("snapshots_per_position", c.snapshots_per_position);

    if (j.contains("network")) {
        const auto& n = j.at("network");
        if (n.contains("conv")) {
            c.network.conv.clear();
            for (const auto& cv : n.at("conv")) {
                ConvSpec spec;
                spec.kernels = cv.value("kernels", std::size_t{32});
                if (cv.contains("size")) {
                    spec.kernel_rows = cv.at("size")[0].get<std::size_t>();
                    spec.kernel_cols = cv.at("size")[1].get<std::size_t>();
                }
                const std::string pad = cv.value("padding", std::string("same"));
                if (pad == "same") spec.padding = Padding::same;
                else if (pad == "valid") spec.padding = Padding::valid;
                else throw std::invalid_argument("padding must be same or valid");
                spec.stride = cv.value("stride", std::size_t{1});
                c.network.conv.push_back(spec);
            }
        }
        if (n.contains("pool")) {
            c.network.pool.clear();
            for (const auto& p : n.at("pool"))
                c.network.pool.push_back({p[0].get<std::size_t>(), p[1].get<std::size_t>()});
        }
        if (n.contains("dense")) {
            c.network.dense.clear();
            for (const auto& d : n.at("dense")) c.network.dense.push_back(d.get<std::size_t>());
        }
    }

    if (j.contains("schedule")) {
        const auto& s = j.at("schedule");
        if (s.value("half_epochs", false)) c.schedule = TrainSchedule::staged(true);
        if (s.contains("stages")) {
            c.schedule.stages.clear();
            for (const auto& st : s.at("stages"))
                c.schedule.stages.push_back(
                    {st[0].get<std::size_t>(), st[1].get<std::size_t>()});
        }
        c.schedule.learning_rate = s.value("learning_rate", c.schedule.learning_rate);
        c.schedule.optimizer = s.value("optimizer", c.schedule.optimizer);
    }

    if (j.contains("experiment")) {
        const auto& e = j.at("experiment");
        if (e.contains("recipes"))
            c.experiment.recipes = e.at("recipes").get<std::vector<std::string>>();
        if (e.contains("pools")) {
            c.experiment.pools.clear();
            for (const auto& p : e.at("pools"))
                c.experiment.pools.push_back(parse_pool(p.get<std::string>()));
        }
        if (e.contains("psc_values"))
            c.experiment.psc_values = e.at("psc_values").get<std::vector<std::size_t>>();
        if (e.contains("seeds"))
            c.experiment.seeds = e.at("seeds").get<std::vector<std::uint64_t>>();
        if (e.contains("geometries"))
            c.experiment.geometries = e.at("geometries").get<std::vector<std::string>>();
        c.experiment.train_fraction = e.value("train_fraction", c.experiment.train_fraction);
    }

    return c;
}

inline json config_to_json(const Config& c) {
    json j;
    json scene;
    scene["carrier_hz"] = c.scene.carrier_hz;
    scene["bandwidth_hz"] = c.scene.bandwidth_hz;
    scene["subcarriers"] = c.scene.n_subcarriers;
    scene["grid_spacing_m"] = c.scene.grid_spacing;
    scene["ue_height_m"] = c.scene.ue_height;
    scene["area"] = {{"x0", c.scene.area.x0},
                     {"y0", c.scene.area.y0},
                     {"width", c.scene.area.width},
                     {"height", c.scene.area.height}};
    json paths = json::array();
    for (const auto& p : c.scene.paths) {
        json pj;
        pj["kind"] = p.kind == Path::Kind::los ? "los" : "scatterer";
        if (p.kind == Path::Kind::scatterer) pj["position"] = detail::vec3_to(p.scatter_point);
        pj["gain"] = json::array({p.gain.real(), p.gain.imag()});
        paths.push_back(pj);
    }
    scene["paths"] = paths;
    j["scene"] = scene;

    j["geometry"] = detail::geometry_to(c.geometry);
    json presets;
    for (const auto& [name, g] : c.geometry_presets) presets[name] = detail::geometry_to(g);
    j["geometry_presets"] = presets;

    j["impairments"] = {
        {"tau_p", {c.impairments.tau_p.lo, c.impairments.tau_p.hi}},
        {"tau_s", {c.impairments.tau_s.lo, c.impairments.tau_s.hi}},
        {"tau_c", {c.impairments.tau_c.lo, c.impairments.tau_c.hi}},
        {"beta", {c.impairments.beta.lo, c.impairments.beta.hi}},
        {"noise_sigma", {c.impairments.noise_sigma.lo, c.impairments.noise_sigma.hi}},
    };
    j["snapshots_per_position"] = c.snapshots_per_position;

    json conv = json::array();
    for (const auto& cv : c.network.conv) {
        conv.push_back({{"kernels", cv.kernels},
                        {"size", {cv.kernel_rows, cv.kernel_cols}},
                        {"padding", cv.padding == Padding::same ? "same" : "valid"},
                        {"stride", cv.stride}});
    }
    json pools = json::array();
    for (const auto& p : c.network.pool) pools.push_back({p.rows, p.cols});
    j["network"] = {{"conv", conv}, {"pool", pools}, {"dense", c.network.dense}};

    json stages = json::array();
    for (const auto& st : c.schedule.stages) stages.push_back({st.batch_size, st.epochs});
    j["schedule"] = {{"stages", stages},
                     {"learning_rate", c.schedule.learning_rate},
                     {"optimizer", c.schedule.optimizer}};

    json pool_names = json::array();
    for (const auto& p : c.experiment.pools) pool_names.push_back(pool_to_string(p));
    j["experiment"] = {{"recipes", c.experiment.recipes},
                       {"pools", pool_names},
                       {"psc_values", c.experiment.psc_values},
                       {"seeds", c.experiment.seeds},
                       {"geometries", c.experiment.geometries},
                       {"train_fraction", c.experiment.train_fraction}};
    return j;
}

// FNV-1a over the canonical JSON dump; enough to re-identify a configuration.
inline std::string config_hash(const Config& c) {
    const std::string dump = config_to_json(c).dump();
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const unsigned char ch : dump) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

inline Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    json j;
    in >> j;
    Config c = config_from_json(j);
    c.hash = config_hash(c);
    return c;
}

inline Config resolved_defaults() {
    Config c = Config::defaults();
    c.hash = config_hash(c);
    return c;
}

}  // namespace csiloc
