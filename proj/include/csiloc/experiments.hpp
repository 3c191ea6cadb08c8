#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "csiloc/config.hpp"
#include "csiloc/io.hpp"

namespace csiloc {

inline double median(std::vector<double> v) {
    if (v.empty()) throw std::invalid_argument("median of empty set");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Fixed input recipe of the pooling study.
inline const std::string pooling_recipe = "mag_d+sin_d+cos_d";

inline std::vector<PlaneSemantic> recipe_semantics(const std::string& recipe,
                                                   const ChannelGrid& sample) {
    const FingerprintTensor t = build_tensor(sample, recipe);
    std::vector<PlaneSemantic> sems;
    for (const auto& p : t.planes) sems.push_back(p.semantic);
    return sems;
}

inline std::vector<LabeledTensor> transform_dataset(const std::vector<LabeledGrid>& grids,
                                                    const std::string& recipe) {
    std::vector<LabeledTensor> out;
    out.reserve(grids.size());
    for (const auto& g : grids) {
        LabeledTensor t;
        t.x = to_tensor(build_tensor(g.grid, recipe));
        t.label = {g.x, g.y};
        out.push_back(std::move(t));
    }
    return out;
}

// Rejects pooling that does not divide the input evenly through every pool
// stage; the equal-complexity comparison relies on exact divisibility.
inline void check_pool_divisibility(std::size_t n_antennas, std::size_t n_subcarriers,
                                    const std::vector<PoolSpec>& pools) {
    std::size_t r = n_antennas, c = n_subcarriers;
    for (std::size_t i = 0; i < pools.size(); ++i) {
        const auto& p = pools[i];
        if (r % p.rows != 0 || c % p.cols != 0)
            throw std::invalid_argument(
                "pooling " + pool_to_string(p) + " does not divide the " + std::to_string(r) +
                "x" + std::to_string(c) + " input of pool stage " + std::to_string(i) +
                "; pick windows that divide both dims through every stage");
        r /= p.rows;
        c /= p.cols;
    }
}

inline void validate_experiment(const Config& cfg) {
    for (const auto& r : cfg.experiment.recipes)
        if (!is_known_recipe(r)) throw std::invalid_argument("unknown recipe: " + r);
    if (!(cfg.experiment.train_fraction > 0.0) || !(cfg.experiment.train_fraction < 1.0))
        throw std::invalid_argument("train fraction must lie strictly between 0 and 1");
    if (cfg.experiment.seeds.empty()) throw std::invalid_argument("experiment needs seeds");
}

struct RunOutcome {
    double me = 0.0;
    double wall_seconds = 0.0;
    std::vector<double> loss_history;
};

// One deterministic training run on an already generated and split dataset.
inline RunOutcome train_and_eval(const Config& cfg, const NetworkConfig& net_template,
                                 const std::vector<LabeledGrid>& grids,
                                 const std::vector<std::size_t>& train_idx,
                                 const std::vector<std::size_t>& test_idx,
                                 const std::string& recipe, std::uint64_t seed) {
    const auto t0 = std::chrono::steady_clock::now();

    const std::vector<LabeledTensor> all = transform_dataset(grids, recipe);
    std::vector<LabeledTensor> train_set, test_set;
    train_set.reserve(train_idx.size());
    test_set.reserve(test_idx.size());
    for (auto i : train_idx) train_set.push_back(all[i]);
    for (auto i : test_idx) test_set.push_back(all[i]);

    const auto sems = recipe_semantics(recipe, grids[0].grid);
    const NormStats norm = normalize_fit(train_set, sems);
    normalize_apply(norm, train_set);
    normalize_apply(norm, test_set);

    NetworkConfig net = net_template;
    net.input_channels = train_set[0].x.channels;
    net.input_rows = train_set[0].x.rows;
    net.input_cols = train_set[0].x.cols;

    TrainResult tr = train(net, cfg.schedule, train_set, seed, norm);

    RunOutcome out;
    out.me = evaluate_me(tr.state, test_set);
    out.loss_history = std::move(tr.loss_history);
    out.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

// Tables I-III style comparison: per seed one shared dataset and split, every
// recipe trained on exactly the same partition so rows are paired.
inline std::vector<ResultRow> run_recipe_comparison(const Config& cfg) {
    validate_experiment(cfg);
    const ArrayGeometry geometry = cfg.geometry.build();
    const std::string pool_label = pool_to_string(cfg.network.pool.at(0));
    const std::string geom_label = to_string(cfg.geometry.kind);

    std::vector<ResultRow> rows;
    for (const std::uint64_t seed : cfg.experiment.seeds) {
        const auto grids = generate_dataset(geometry, cfg.scene, cfg.snapshots_per_position,
                                            cfg.impairments, seed);
        const auto [train_idx, test_idx] =
            split_indices(grids.size(), cfg.experiment.train_fraction, seed);
        for (const auto& recipe : cfg.experiment.recipes) {
            const RunOutcome out =
                train_and_eval(cfg, cfg.network, grids, train_idx, test_idx, recipe, seed);
            rows.push_back({recipe, pool_label, geom_label, seed, cfg.hash, out.me,
                            out.wall_seconds});
        }
    }
    return rows;
}

// Table IV style comparison: pooling options on the fixed three-plane H_D
// recipe, per receiver geometry preset.
inline std::vector<ResultRow> run_pooling_comparison(const Config& cfg) {
    validate_experiment(cfg);
    for (const auto& name : cfg.experiment.geometries) {
        const auto it = cfg.geometry_presets.find(name);
        if (it == cfg.geometry_presets.end())
            throw std::invalid_argument("no geometry preset named " + name);
        const std::size_t n_r = it->second.build().n_antennas();
        for (const auto& p : cfg.experiment.pools) {
            std::vector<PoolSpec> stages(cfg.network.pool.size(), p);
            check_pool_divisibility(n_r, cfg.scene.n_subcarriers, stages);
        }
    }

    std::vector<ResultRow> rows;
    for (const auto& name : cfg.experiment.geometries) {
        const GeometryConfig& preset = cfg.geometry_presets.at(name);
        const ArrayGeometry geometry = preset.build();
        for (const std::uint64_t seed : cfg.experiment.seeds) {
            const auto grids = generate_dataset(geometry, cfg.scene, cfg.snapshots_per_position,
                                                cfg.impairments, seed);
            const auto [train_idx, test_idx] =
                split_indices(grids.size(), cfg.experiment.train_fraction, seed);
            for (const auto& p : cfg.experiment.pools) {
                NetworkConfig net = cfg.network;
                net.pool.assign(net.pool.size(), p);
                const RunOutcome out = train_and_eval(cfg, net, grids, train_idx, test_idx,
                                                      pooling_recipe, seed);
                rows.push_back({pooling_recipe, pool_to_string(p), name, seed, cfg.hash,
                                out.me, out.wall_seconds});
            }
        }
    }
    return rows;
}

// ME against p_sc for [1, p_sc] pooling, per geometry preset; emits the curve
// data, asserts nothing about its shape.
inline std::vector<ResultRow> run_psc_sweep(const Config& cfg,
                                            const std::vector<std::size_t>& psc_values) {
    validate_experiment(cfg);
    if (psc_values.empty()) throw std::invalid_argument("sweep needs at least one p_sc");
    for (const auto& name : cfg.experiment.geometries) {
        const auto it = cfg.geometry_presets.find(name);
        if (it == cfg.geometry_presets.end())
            throw std::invalid_argument("no geometry preset named " + name);
        for (const std::size_t psc : psc_values) {
            std::vector<PoolSpec> stages(cfg.network.pool.size(), PoolSpec{1, psc});
            check_pool_divisibility(it->second.build().n_antennas(), cfg.scene.n_subcarriers,
                                    stages);
        }
    }

    std::vector<ResultRow> rows;
    for (const auto& name : cfg.experiment.geometries) {
        const ArrayGeometry geometry = cfg.geometry_presets.at(name).build();
        for (const std::uint64_t seed : cfg.experiment.seeds) {
            const auto grids = generate_dataset(geometry, cfg.scene, cfg.snapshots_per_position,
                                                cfg.impairments, seed);
            const auto [train_idx, test_idx] =
                split_indices(grids.size(), cfg.experiment.train_fraction, seed);
            for (const std::size_t psc : psc_values) {
                NetworkConfig net = cfg.network;
                net.pool.assign(net.pool.size(), PoolSpec{1, psc});
                const RunOutcome out = train_and_eval(cfg, net, grids, train_idx, test_idx,
                                                      pooling_recipe, seed);
                rows.push_back({pooling_recipe, pool_to_string({1, psc}), name, seed, cfg.hash,
                                out.me, out.wall_seconds});
            }
        }
    }
    return rows;
}

// Median ME over seeds for one (recipe, pooling, geometry) label set.
inline double median_me(const std::vector<ResultRow>& rows, const std::string& recipe,
                        const std::string& pooling, const std::string& geometry) {
    std::vector<double> mes;
    for (const auto& r : rows)
        if (r.recipe == recipe && r.pooling == pooling && r.geometry == geometry)
            mes.push_back(r.me_m);
    return median(std::move(mes));
}

}  // namespace csiloc
