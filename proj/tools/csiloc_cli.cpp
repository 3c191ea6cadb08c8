// Command-line front end: dataset generation, single training runs, and the
// recipe / pooling / p_sc comparison studies, all seeded and reproducible.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "csiloc/experiments.hpp"

namespace fs = std::filesystem;
using namespace csiloc;

namespace {

Config load_or_default(const std::string& path) {
    if (path.empty()) return resolved_defaults();
    return load_config(path);
}

void apply_geometry_override(Config& cfg, const std::string& geometry) {
    if (geometry.empty()) return;
    const ArrayKind kind = parse_geometry_kind(geometry);
    const auto it = cfg.geometry_presets.find(geometry);
    if (it != cfg.geometry_presets.end() && kind != cfg.geometry.kind) {
        cfg.geometry = it->second;
    } else {
        cfg.geometry.kind = kind;
    }
    cfg.hash = config_hash(cfg);
}

void write_loss_history(const std::vector<double>& history, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot open for writing: " + path);
    out << "epoch,train_loss_m\n";
    char buf[64];
    for (std::size_t i = 0; i < history.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%zu,%.9g\n", i + 1, history[i]);
        out << buf;
    }
}

std::vector<LabeledGrid> make_grids(const Config& cfg, std::uint64_t seed) {
    const ArrayGeometry geometry = cfg.geometry.build();
    return generate_dataset(geometry, cfg.scene, cfg.snapshots_per_position, cfg.impairments,
                            seed);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CSI fingerprint localization toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 1;
    std::string out_dir = ".";
    std::string geometry;
    std::string recipe = "mag_d+sin_d+cos_d";
    std::string pool;
    std::string data_path;
    std::string weights_path;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON configuration file");
        cmd->add_option("--seed", seed, "master seed");
        cmd->add_option("--out", out_dir, "output directory");
        cmd->add_option("--geometry", geometry, "receiver geometry: ula, ura or dis");
    };

    auto* gen = app.add_subcommand("gen", "generate a labeled synthetic dataset");
    add_common(gen);
    std::string gen_recipe = "raw";
    gen->add_option("--recipe", gen_recipe,
                    "fingerprint recipe, or 'raw' for real/imag planes");

    auto* train_cmd = app.add_subcommand("train", "train one network on a dataset");
    add_common(train_cmd);
    train_cmd->add_option("--recipe", recipe, "fingerprint recipe");
    train_cmd->add_option("--pool", pool, "pooling window <p_ant>x<p_sc>");
    train_cmd->add_option("--data", data_path, "raw dataset container (default: generate)");

    auto* eval_cmd = app.add_subcommand("eval", "evaluate saved weights on a dataset");
    add_common(eval_cmd);
    eval_cmd->add_option("--recipe", recipe, "fingerprint recipe used at training time");
    eval_cmd->add_option("--data", data_path, "raw dataset container")->required();
    eval_cmd->add_option("--weights", weights_path, "weights container")->required();

    auto* cmp_recipes = app.add_subcommand("compare-recipes", "ME per fingerprint recipe");
    add_common(cmp_recipes);

    auto* cmp_pooling = app.add_subcommand("compare-pooling", "ME per pooling option");
    add_common(cmp_pooling);

    auto* sweep = app.add_subcommand("sweep-psc", "ME against subcarrier pooling size");
    add_common(sweep);

    CLI11_PARSE(app, argc, argv);

    try {
        Config cfg = load_or_default(config_path);
        apply_geometry_override(cfg, geometry);
        fs::create_directories(out_dir);

        if (gen->parsed()) {
            const auto grids = make_grids(cfg, seed);
            Dataset ds;
            if (gen_recipe == "raw") {
                ds = grids_to_dataset(grids);
            } else {
                const auto tensors = transform_dataset(grids, gen_recipe);
                ds.n_antennas = tensors[0].x.rows;
                ds.n_subcarriers = tensors[0].x.cols;
                ds.semantics = recipe_semantics(gen_recipe, grids[0].grid);
                ds.samples = tensors;
            }
            const std::string path = out_dir + "/dataset.bin";
            write_dataset(ds, path);
            std::cout << "wrote " << ds.samples.size() << " samples to " << path << "\n";
        } else if (train_cmd->parsed()) {
            if (!pool.empty()) {
                const PoolSpec p = parse_pool(pool);
                cfg.network.pool.assign(cfg.network.pool.size(), p);
                cfg.hash = config_hash(cfg);
            }
            std::vector<LabeledGrid> grids;
            if (data_path.empty()) {
                grids = make_grids(cfg, seed);
            } else {
                grids = dataset_to_grids(read_dataset(data_path));
            }
            const auto [train_idx, test_idx] =
                split_indices(grids.size(), cfg.experiment.train_fraction, seed);

            const std::vector<LabeledTensor> all = transform_dataset(grids, recipe);
            std::vector<LabeledTensor> train_set, test_set;
            for (auto i : train_idx) train_set.push_back(all[i]);
            for (auto i : test_idx) test_set.push_back(all[i]);
            const auto sems = recipe_semantics(recipe, grids[0].grid);
            const NormStats norm = normalize_fit(train_set, sems);
            normalize_apply(norm, train_set);
            normalize_apply(norm, test_set);

            NetworkConfig net = cfg.network;
            net.input_channels = train_set[0].x.channels;
            net.input_rows = train_set[0].x.rows;
            net.input_cols = train_set[0].x.cols;

            TrainResult tr = train(net, cfg.schedule, train_set, seed, norm);
            const double me = evaluate_me(tr.state, test_set);

            write_state(tr.state, out_dir + "/weights.bin");
            write_loss_history(tr.loss_history, out_dir + "/loss_history.csv");
            std::cout << "recipe " << recipe << ", seed " << seed << ": test ME = " << me
                      << " m (" << train_set.size() << " train / " << test_set.size()
                      << " test samples)\n";
        } else if (eval_cmd->parsed()) {
            const TrainState state = read_state(weights_path);
            const auto grids = dataset_to_grids(read_dataset(data_path));
            std::vector<LabeledTensor> set = transform_dataset(grids, recipe);
            for (auto& s : set) normalize_apply(state.norm, s.x);
            std::cout << "ME = " << evaluate_me(state, set) << " m over " << set.size()
                      << " samples\n";
        } else if (cmp_recipes->parsed()) {
            const auto rows = run_recipe_comparison(cfg);
            const std::string path = out_dir + "/recipe_comparison.csv";
            write_results(rows, path);
            for (const auto& r : cfg.experiment.recipes)
                std::cout << r << ": median ME = "
                          << median_me(rows, r, pool_to_string(cfg.network.pool.at(0)),
                                       to_string(cfg.geometry.kind))
                          << " m\n";
            std::cout << "wrote " << path << "\n";
        } else if (cmp_pooling->parsed()) {
            const auto rows = run_pooling_comparison(cfg);
            const std::string path = out_dir + "/pooling_comparison.csv";
            write_results(rows, path);
            for (const auto& g : cfg.experiment.geometries)
                for (const auto& p : cfg.experiment.pools)
                    std::cout << g << " [" << pool_to_string(p) << "]: median ME = "
                              << median_me(rows, pooling_recipe, pool_to_string(p), g) << " m\n";
            std::cout << "wrote " << path << "\n";
        } else if (sweep->parsed()) {
            const auto rows = run_psc_sweep(cfg, cfg.experiment.psc_values);
            const std::string path = out_dir + "/psc_sweep.csv";
            write_results(rows, path);
            std::cout << "wrote " << path << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
