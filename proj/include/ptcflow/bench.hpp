#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ptcflow/config.hpp"
#include "ptcflow/oracle.hpp"
#include "ptcflow/ptc.hpp"

namespace ptcflow {

struct ExperimentConfig {
    std::string id;
    std::string family;  // plot grouping, e.g. "B1", "C", "BO"
    GeometrySpec geometry;
    double h_max = 0.0;
    double velocity = 0.0;  // inlet peak or moving-wall speed
    FluidProps props;
    double outlet_pressure = 0.0;
    std::vector<StrategyKind> strategies;
    double tol = 1e-6;
    int max_iter = 100;
    std::uint64_t seed = 1;

    Problem make_problem() const;
};

ExperimentConfig parse_experiment_config(const KeyValueFile& kv);
DataGenConfig parse_datagen_config(const KeyValueFile& kv);

// Desk-scale benchmark matrix: B1 at 3 mesh sizes x 3 velocities, C at 2 x 2,
// BO at 2 obstacle positions x 2 velocities (17 runs).
std::vector<ExperimentConfig> desk_preset();

// The full benchmark matrix of back-step, mirrored/rotated/scaled, Couette
// and obstacle configurations.
std::vector<ExperimentConfig> full_preset();

// Desk-scale training-data configurations (coarse B1 meshes).
std::vector<DataGenConfig> desk_data_preset();

struct RunResult {
    std::string config_id;
    std::string family;
    StrategyKind strategy = StrategyKind::IterSchedule;
    bool executed = false;  // solver ran to a verdict (converged or not)
    bool converged = false;
    int iterations = 0;
    int max_iter = 100;
    double final_rel_residual = 0.0;
    std::string error;  // setup failures (bad mesh etc.)
};

struct SuiteResult {
    std::vector<RunResult> runs;
    bool all_executed = true;
};

// Runs every (config, strategy) pair, writes one CSV per run plus
// summary.csv, means.csv, an ordered scatter SVG per family and a
// convergence SVG per config.
SuiteResult run_suite(const std::vector<ExperimentConfig>& configs, const MlpModel* model,
                      const std::string& out_dir, int workers = 1);

void write_suite_summary(const SuiteResult& suite, const std::string& path);
void write_suite_means(const SuiteResult& suite, const std::string& path);

struct PlotSeries {
    std::string label;
    std::vector<double> values;
};

// Residual history on a log scale, one series per report.
void emit_convergence_plot(const std::vector<SolveReport>& reports, const std::string& path);
void write_convergence_svg(const std::vector<PlotSeries>& series, const std::string& path);

// Iteration counts sorted ascending per series, with mean lines.
void write_scatter_svg(const std::vector<PlotSeries>& series, const std::vector<double>& means,
                       const std::string& title, const std::string& path);

}  // namespace ptcflow
