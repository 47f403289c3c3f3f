// ptcflow command-line driver: meshing, solving, training-data generation,
// network training and the benchmark suite.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "ptcflow/bench.hpp"
#include "ptcflow/config.hpp"
#include "ptcflow/dataset.hpp"
#include "ptcflow/mesh.hpp"
#include "ptcflow/nn.hpp"
#include "ptcflow/oracle.hpp"
#include "ptcflow/ptc.hpp"

namespace {

using namespace ptcflow;

int worker_count() {
    const char* env = std::getenv("PTCFLOW_WORKERS");
    if (!env) return 1;
    const int n = std::atoi(env);
    return n > 0 ? n : 1;
}

std::vector<ExperimentConfig> load_experiment_configs(const std::string& preset,
                                                      const std::vector<std::string>& files) {
    std::vector<ExperimentConfig> configs;
    if (preset == "desk")
        configs = desk_preset();
    else if (preset == "full")
        configs = full_preset();
    else if (!preset.empty())
        throw std::invalid_argument("unknown preset '" + preset + "'");
    for (const auto& path : files)
        configs.push_back(parse_experiment_config(KeyValueFile::parse_file(path)));
    if (configs.empty()) throw std::invalid_argument("no configurations given");
    return configs;
}

int cmd_mesh(const std::string& config_path, const std::string& out, double h_override) {
    const KeyValueFile kv = KeyValueFile::parse_file(config_path);
    const ExperimentConfig cfg = parse_experiment_config(kv);
    const double h = h_override > 0.0 ? h_override : cfg.h_max;
    const Mesh mesh = generate_mesh(cfg.geometry, h);
    save_mesh(mesh, out);
    std::cout << "mesh: " << mesh.n_vertices() << " vertices, " << mesh.n_elements()
              << " elements, " << mesh.boundary_edges.size() << " boundary edges -> " << out
              << "\n";
    return 0;
}

int cmd_solve(const std::string& config_path, const std::string& strategy_name,
              const std::string& model_path, const std::string& out_dir) {
    ExperimentConfig cfg = parse_experiment_config(KeyValueFile::parse_file(config_path));
    MlpModel model;
    CflStrategy strategy;
    if (strategy_name == "iter_schedule")
        strategy = CflStrategy::iter_schedule();
    else if (strategy_name == "err_controller")
        strategy = CflStrategy::err_controller();
    else if (strategy_name == "newton_constant")
        strategy = CflStrategy::newton_constant();
    else if (strategy_name == "newton_adaptive")
        strategy = CflStrategy::newton_adaptive();
    else if (strategy_name == "learned") {
        if (model_path.empty()) throw std::invalid_argument("learned strategy needs --model");
        model = load_model(model_path);
        strategy = CflStrategy::learned(&model);
    } else {
        throw std::invalid_argument("unknown strategy '" + strategy_name + "'");
    }

    const Problem problem = cfg.make_problem();
    SolveSettings ss;
    ss.max_iter = cfg.max_iter;
    ss.tol = cfg.tol;
    const SolveReport report = solve_nonlinear(problem, strategy, ss);

    std::filesystem::create_directories(out_dir);
    const std::string base = out_dir + "/" + cfg.id + "_" + strategy_name;
    save_report_csv(report, base + ".csv");
    emit_convergence_plot({report}, base + ".svg");
    std::cout << cfg.id << " " << strategy_name << ": "
              << (report.converged ? "converged" : "not converged") << " in " << report.iterations
              << " iterations";
    if (!report.failure.empty()) std::cout << " (" << report.failure << ")";
    std::cout << "\n";
    return 0;
}

int cmd_gen_data(const std::string& preset, const std::vector<std::string>& files,
                 const std::string& out_dir, std::uint64_t seed, std::size_t group_cap) {
    std::vector<DataGenConfig> configs;
    if (preset == "desk") configs = desk_data_preset();
    for (const auto& path : files)
        configs.push_back(parse_datagen_config(KeyValueFile::parse_file(path)));
    if (configs.empty()) throw std::invalid_argument("no data configurations given");

    std::filesystem::create_directories(out_dir);
    std::ofstream manifest(out_dir + "/manifest.txt");
    const DataGenResult result = generate_dataset(configs, seed, &manifest, group_cap);
    save_dataset_csv(result.dataset, out_dir + "/dataset.csv");
    save_splits_csv(result.dataset, out_dir + "/splits.csv");
    std::cout << "dataset: " << result.dataset.size() << " samples ("
              << result.samples_before_balancing << " before balancing), " << result.skipped.size()
              << " configs skipped -> " << out_dir << "\n";
    return 0;
}

int cmd_train(const std::string& dataset_path, const std::string& splits_path,
              const std::string& out_path, const std::string& log_path, TrainConfig cfg) {
    Dataset ds = load_dataset_csv(dataset_path);
    if (!splits_path.empty())
        load_splits_csv(ds, splits_path);
    else
        assign_splits(ds, cfg.seed);
    const TrainResult result = train(ds, cfg);
    save_model(result.model, out_path);
    if (!log_path.empty()) save_training_log(result, log_path);
    std::cout << "trained " << result.model.dims.size() - 2 << " hidden layers, best epoch "
              << result.best_epoch << ", val rmse " << result.model.final_val_rmse << " -> "
              << out_path << "\n";
    return 0;
}

int cmd_grid_search(const std::string& dataset_path, const std::string& splits_path,
                    const std::string& out_path, TrainConfig cfg, int folds,
                    const std::vector<int>& layers, const std::vector<int>& widths) {
    Dataset ds = load_dataset_csv(dataset_path);
    if (!splits_path.empty())
        load_splits_csv(ds, splits_path);
    else
        assign_splits(ds, cfg.seed);
    const auto rows = grid_search(ds, cfg, layers, widths, folds);
    std::ofstream f(out_path);
    f << "hidden_layers,width,mean_val_rmse\n";
    for (const auto& r : rows) f << r.hidden_layers << "," << r.width << "," << r.mean_val_rmse << "\n";
    std::cout << "grid search: best " << rows.front().hidden_layers << " layers x "
              << rows.front().width << " -> " << out_path << "\n";
    return 0;
}

int cmd_bench(const std::string& preset, const std::vector<std::string>& files,
              const std::string& out_dir, const std::string& model_path) {
    auto configs = load_experiment_configs(preset, files);
    MlpModel model;
    const MlpModel* model_ptr = nullptr;
    if (!model_path.empty()) {
        model = load_model(model_path);
        model_ptr = &model;
        for (auto& cfg : configs) {
            bool has = false;
            for (auto s : cfg.strategies) has = has || s == StrategyKind::Learned;
            if (!has) cfg.strategies.push_back(StrategyKind::Learned);
        }
    }
    const SuiteResult suite = run_suite(configs, model_ptr, out_dir, worker_count());
    int converged = 0, executed = 0;
    for (const auto& r : suite.runs) {
        executed += r.executed ? 1 : 0;
        converged += r.converged ? 1 : 0;
    }
    std::cout << "suite: " << suite.runs.size() << " runs, " << executed << " executed, "
              << converged << " converged -> " << out_dir << "\n";
    return suite.all_executed ? 0 : 1;
}

int cmd_plot(const std::vector<std::string>& run_files, const std::string& out_path) {
    std::vector<PlotSeries> series;
    for (const auto& path : run_files) {
        std::ifstream f(path);
        if (!f) throw std::runtime_error("plot: cannot open " + path);
        std::string line;
        std::getline(f, line);  // header
        PlotSeries ps;
        ps.label = std::filesystem::path(path).stem().string();
        while (std::getline(f, line)) {
            std::stringstream ss(line);
            std::string cell;
            std::getline(ss, cell, ',');  // iter
            std::getline(ss, cell, ',');  // residual
            ps.values.push_back(std::stod(cell));
        }
        series.push_back(std::move(ps));
    }
    write_convergence_svg(series, out_path);
    std::cout << "plot: " << series.size() << " series -> " << out_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"2D stationary Navier-Stokes solver with pseudo-transient continuation and a "
                 "learned local step-size controller"};
    app.require_subcommand(1);

    std::string config_path, out_path, model_path, strategy_name, preset;
    std::vector<std::string> config_files, run_files;
    double h_override = 0.0;
    std::uint64_t seed = 1;
    std::size_t group_cap = SIZE_MAX;
    std::string dataset_path, splits_path, log_path;
    TrainConfig tc;
    int folds = 6;
    std::vector<int> gs_layers = {2, 3, 4, 5};
    std::vector<int> gs_widths = {16, 32, 64, 128, 256};

    auto* mesh_cmd = app.add_subcommand("mesh", "generate a mesh and write the text format");
    mesh_cmd->add_option("--config", config_path, "experiment config file")->required();
    mesh_cmd->add_option("--out", out_path, "output mesh file")->required();
    mesh_cmd->add_option("--h-max", h_override, "override the config mesh size");

    auto* solve_cmd = app.add_subcommand("solve", "run one nonlinear solve");
    solve_cmd->add_option("--config", config_path, "experiment config file")->required();
    solve_cmd->add_option("--strategy", strategy_name, "pseudo-time step strategy")->required();
    solve_cmd->add_option("--model", model_path, "model file for the learned strategy");
    solve_cmd->add_option("--out", out_path, "output directory")->required();

    auto* gen_cmd = app.add_subcommand("gen-data", "generate the training dataset");
    gen_cmd->add_option("--preset", preset, "desk");
    gen_cmd->add_option("--config", config_files, "data config files");
    gen_cmd->add_option("--out", out_path, "output directory")->required();
    gen_cmd->add_option("--seed", seed, "random seed");
    gen_cmd->add_option("--group-cap", group_cap, "cap per mesh-size group");

    auto* train_cmd = app.add_subcommand("train", "train the step-size network");
    train_cmd->add_option("--dataset", dataset_path, "dataset csv")->required();
    train_cmd->add_option("--splits", splits_path, "splits csv");
    train_cmd->add_option("--out", out_path, "model output file")->required();
    train_cmd->add_option("--log", log_path, "training log csv");
    train_cmd->add_option("--seed", tc.seed, "random seed");
    train_cmd->add_option("--epochs", tc.max_epochs, "max epochs");
    train_cmd->add_option("--batch", tc.batch_size, "batch size");
    train_cmd->add_option("--lr", tc.learning_rate, "learning rate");
    train_cmd->add_option("--patience", tc.patience, "early-stopping patience");
    bool raw_targets = false;
    train_cmd->add_flag("--raw-targets", raw_targets, "train on raw dt instead of log(dt)");

    auto* gs_cmd = app.add_subcommand("grid-search", "architecture grid search");
    gs_cmd->add_option("--dataset", dataset_path, "dataset csv")->required();
    gs_cmd->add_option("--splits", splits_path, "splits csv");
    gs_cmd->add_option("--out", out_path, "ranking csv")->required();
    gs_cmd->add_option("--seed", tc.seed, "random seed");
    gs_cmd->add_option("--epochs", tc.max_epochs, "max epochs per fold");
    gs_cmd->add_option("--folds", folds, "cross-validation folds");
    gs_cmd->add_option("--layers", gs_layers, "hidden layer counts");
    gs_cmd->add_option("--widths", gs_widths, "hidden layer widths");

    auto* bench_cmd = app.add_subcommand("bench", "run a benchmark suite");
    bench_cmd->add_option("--preset", preset, "desk or full");
    bench_cmd->add_option("--config", config_files, "experiment config files");
    bench_cmd->add_option("--out", out_path, "output directory")->required();
    bench_cmd->add_option("--model", model_path, "model file; adds the learned strategy");

    auto* plot_cmd = app.add_subcommand("plot", "convergence plot from per-run csv files");
    plot_cmd->add_option("--run", run_files, "per-run csv files")->required();
    plot_cmd->add_option("--out", out_path, "output svg")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(mesh_cmd)) return cmd_mesh(config_path, out_path, h_override);
        if (app.got_subcommand(solve_cmd))
            return cmd_solve(config_path, strategy_name, model_path, out_path);
        if (app.got_subcommand(gen_cmd))
            return cmd_gen_data(preset, config_files, out_path, seed, group_cap);
        if (app.got_subcommand(train_cmd)) {
            tc.log_targets = !raw_targets;
            return cmd_train(dataset_path, splits_path, out_path, log_path, tc);
        }
        if (app.got_subcommand(gs_cmd))
            return cmd_grid_search(dataset_path, splits_path, out_path, tc, folds, gs_layers,
                                   gs_widths);
        if (app.got_subcommand(bench_cmd)) return cmd_bench(preset, config_files, out_path, model_path);
        if (app.got_subcommand(plot_cmd)) return cmd_plot(run_files, out_path);
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    }
    return 0;
}
