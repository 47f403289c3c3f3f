#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ptcflow/fem.hpp"
#include "ptcflow/mesh.hpp"
#include "ptcflow/nn.hpp"

namespace ptcflow {

struct Problem {
    Mesh mesh;
    FluidProps props;
    BoundaryConditions bc;
    AssemblyOpts assembly;  // test hooks (Stokes limit); apply_dirichlet stays on
};

enum class StrategyKind { IterSchedule, ErrController, Learned, NewtonConstant, NewtonAdaptive };

const char* to_string(StrategyKind kind);

struct CflStrategy {
    StrategyKind kind = StrategyKind::IterSchedule;

    // ErrController. The controller tolerance is a per-iteration target for
    // the error estimate, not the convergence tolerance: driving the I-term
    // with the final tolerance shrinks the CFL towards cfl_min long before
    // the residual can follow.
    double k_p = 0.65, k_i = 0.05, k_d = 0.05;
    double controller_tol = 1e-3;
    double cfl0 = 1.0;
    double cfl_min = 1e-4, cfl_max = 1e8;

    // Learned
    const MlpModel* model = nullptr;
    double dt_floor = 1e-12, dt_cap = 1e12;

    // Newton baselines
    double damping = 1.0;      // NewtonConstant
    double lambda_min = 1e-4;  // NewtonAdaptive

    static CflStrategy iter_schedule() { return {}; }
    static CflStrategy err_controller(double tol = 1e-3) {
        CflStrategy s;
        s.kind = StrategyKind::ErrController;
        s.controller_tol = tol;
        return s;
    }
    static CflStrategy learned(const MlpModel* m) {
        CflStrategy s;
        s.kind = StrategyKind::Learned;
        s.model = m;
        return s;
    }
    static CflStrategy newton_constant(double lambda = 1.0) {
        CflStrategy s;
        s.kind = StrategyKind::NewtonConstant;
        s.damping = lambda;
        return s;
    }
    static CflStrategy newton_adaptive(double lambda_min = 1e-4) {
        CflStrategy s;
        s.kind = StrategyKind::NewtonAdaptive;
        s.lambda_min = lambda_min;
        return s;
    }
};

struct SolveSettings {
    int max_iter = 100;
    double tol = 1e-6;      // relative to the initial residual norm
    double eps_u = 1e-10;   // zero-velocity guard (m/s)
    const State* initial_state = nullptr;  // warm start; Dirichlet values re-imposed
    // Called with (n, v) right before step n is taken from linearization
    // point v; used to record snapshot iterates.
    std::function<void(int, const State&)> observer;
};

struct SolveReport {
    bool converged = false;
    int iterations = 0;
    std::vector<double> residual_history;  // absolute reconstructed norms, length iterations+1
    std::vector<double> cfl_history;       // per iteration; NaN where not applicable
    std::vector<double> min_dt_history, max_dt_history;
    std::vector<double> wall_ms_history;
    double wall_seconds = 0.0;
    State final_state;
    std::string strategy_name;
    std::string failure;  // empty unless the iteration aborted
};

// COMSOL-style iteration schedule for the global CFL number, base 1.3.
double cfl_iter(int n);

// PID-type controller update from the last three error estimates; missing
// history factors are neutral.
double cfl_err(double e_nm1, std::optional<double> e_nm2, std::optional<double> e_nm3,
               double prev_cfl, const CflStrategy& params);

// dt_e = cfl * h_e / max(u_norm_e, eps_u)
double local_dt(double cfl, double h_e, double u_norm_e, double eps_u = 1e-10);

struct StepResult {
    State state;
    std::vector<double> step;  // flat layout
};

// One linearized pseudo-time step v - (M(dt) + F'(v))^{-1} F(v).
StepResult ptc_step(const Problem& problem, const DirichletBc& dirichlet, const State& state,
                    const std::vector<double>& dt_e);

// Undamped Newton step v - F'(v)^{-1} F(v).
StepResult newton_step(const Problem& problem, const DirichletBc& dirichlet, const State& state);

struct LineSearchResult {
    State state;
    double lambda = 1.0;
    bool forced = false;  // no candidate satisfied the decrease condition
};

// Halves lambda from 1 while norm_at(lambda) > (1 - lambda/2) * f0, down to
// lambda_min; when nothing satisfies the condition the best candidate wins.
std::pair<double, bool> armijo_backtrack(const std::function<double(double)>& norm_at, double f0,
                                         double lambda_min);

// Armijo-style backtracking on the residual norm along a Newton step.
LineSearchResult newton_adaptive_step(const Problem& problem, const DirichletBc& dirichlet,
                                      const State& state, const std::vector<double>& step,
                                      double lambda_min = 1e-4);

SolveReport solve_nonlinear(const Problem& problem, const CflStrategy& strategy,
                            const SolveSettings& settings = {});

// One CSV row per iteration: iter,residual,global_cfl,min_dt,max_dt,wall_ms
void save_report_csv(const SolveReport& report, const std::string& path);

}  // namespace ptcflow
