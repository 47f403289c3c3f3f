#include "ptcflow/ptc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "ptcflow/linsolve.hpp"

namespace ptcflow {

const char* to_string(StrategyKind kind) {
    switch (kind) {
        case StrategyKind::IterSchedule: return "iter_schedule";
        case StrategyKind::ErrController: return "err_controller";
        case StrategyKind::Learned: return "learned";
        case StrategyKind::NewtonConstant: return "newton_constant";
        case StrategyKind::NewtonAdaptive: return "newton_adaptive";
    }
    return "unknown";
}

double cfl_iter(int n) {
    if (n < 1) throw std::domain_error("cfl_iter: iteration count must be >= 1");
    const double p9 = std::pow(1.3, 9);
    if (n <= 20) return std::pow(1.3, std::min(n, 9));
    if (n <= 40) return p9 + 9.0 * std::pow(1.3, std::min(n - 20, 9));
    return p9 + 9.0 * p9 + 90.0 * std::pow(1.3, std::min(n - 40, 9));
}

double cfl_err(double e_nm1, std::optional<double> e_nm2, std::optional<double> e_nm3,
               double prev_cfl, const CflStrategy& params) {
    if (!(e_nm1 > 0.0) || (e_nm2 && !(*e_nm2 > 0.0)) || (e_nm3 && !(*e_nm3 > 0.0)))
        throw std::domain_error("cfl_err: error estimates must be positive");
    const double rp = e_nm2 ? *e_nm2 / e_nm1 : 1.0;
    const double ri = params.controller_tol / e_nm1;
    const double rd = (e_nm2 && e_nm3) ? (*e_nm2 / e_nm1) / (*e_nm3 / *e_nm2) : 1.0;
    const double cfl = std::pow(rp, params.k_p) * std::pow(ri, params.k_i) *
                       std::pow(rd, params.k_d) * prev_cfl;
    return std::clamp(cfl, params.cfl_min, params.cfl_max);
}

double local_dt(double cfl, double h_e, double u_norm_e, double eps_u) {
    return cfl * h_e / std::max(u_norm_e, eps_u);
}

StepResult ptc_step(const Problem& problem, const DirichletBc& dirichlet, const State& state,
                    const std::vector<double>& dt_e) {
    const SparseMatrix A =
        assemble_ptc_matrix(problem.mesh, problem.props, problem.bc, dirichlet, state, dt_e,
                            problem.assembly);
    const auto F = assemble_residual(problem.mesh, problem.props, problem.bc, dirichlet, state,
                                     problem.assembly);
    std::vector<double> rhs(F.size());
    for (std::size_t i = 0; i < F.size(); ++i) rhs[i] = -F[i];
    const Factorization lu(A);
    StepResult r;
    r.step = lu.solve(rhs);
    auto flat = state.flat();
    for (std::size_t i = 0; i < flat.size(); ++i) flat[i] += r.step[i];
    r.state = State::from_flat(flat);
    return r;
}

StepResult newton_step(const Problem& problem, const DirichletBc& dirichlet, const State& state) {
    const SparseMatrix J =
        assemble_jacobian(problem.mesh, problem.props, problem.bc, dirichlet, state,
                          problem.assembly);
    const auto F = assemble_residual(problem.mesh, problem.props, problem.bc, dirichlet, state,
                                     problem.assembly);
    std::vector<double> rhs(F.size());
    for (std::size_t i = 0; i < F.size(); ++i) rhs[i] = -F[i];
    const Factorization lu(J);
    StepResult r;
    r.step = lu.solve(rhs);
    auto flat = state.flat();
    for (std::size_t i = 0; i < flat.size(); ++i) flat[i] += r.step[i];
    r.state = State::from_flat(flat);
    return r;
}

namespace {

double residual_norm_at(const Problem& problem, const DirichletBc& dirichlet, const State& s) {
    const auto F = assemble_residual(problem.mesh, problem.props, problem.bc, dirichlet, s,
                                     problem.assembly);
    return reconstructed_residual_norm(problem.mesh, F);
}

}  // namespace

std::pair<double, bool> armijo_backtrack(const std::function<double(double)>& norm_at, double f0,
                                         double lambda_min) {
    double best_lambda = 1.0;
    double best_norm = std::numeric_limits<double>::max();
    for (double lambda = 1.0; lambda >= lambda_min; lambda *= 0.5) {
        const double norm = norm_at(lambda);
        if (std::isfinite(norm) && norm <= (1.0 - 0.5 * lambda) * f0) return {lambda, false};
        if (norm < best_norm) {
            best_norm = norm;
            best_lambda = lambda;
        }
    }
    return {best_lambda, true};
}

LineSearchResult newton_adaptive_step(const Problem& problem, const DirichletBc& dirichlet,
                                      const State& state, const std::vector<double>& step,
                                      double lambda_min) {
    const double f0 = residual_norm_at(problem, dirichlet, state);
    const auto flat0 = state.flat();

    auto candidate = [&](double lambda) {
        auto flat = flat0;
        for (std::size_t i = 0; i < flat.size(); ++i) flat[i] += lambda * step[i];
        return State::from_flat(flat);
    };
    auto norm_at = [&](double lambda) {
        try {
            return residual_norm_at(problem, dirichlet, candidate(lambda));
        } catch (const std::domain_error&) {
            return std::numeric_limits<double>::infinity();  // overflowed trial point
        }
    };

    const auto [lambda, forced] = armijo_backtrack(norm_at, f0, lambda_min);
    return {candidate(lambda), lambda, forced};
}

SolveReport solve_nonlinear(const Problem& problem, const CflStrategy& strategy,
                            const SolveSettings& settings) {
    if (settings.max_iter < 1) throw std::invalid_argument("solve_nonlinear: max_iter must be >= 1");
    if (!(settings.tol > 0.0)) throw std::invalid_argument("solve_nonlinear: tol must be positive");
    if (strategy.kind == StrategyKind::Learned && !strategy.model)
        throw std::invalid_argument("solve_nonlinear: learned strategy without a model");

    const auto t_start = std::chrono::steady_clock::now();
    const Mesh& mesh = problem.mesh;
    const int ne = mesh.n_elements();

    SolveReport report;
    report.strategy_name = to_string(strategy.kind);

    const DirichletBc dirichlet = build_dirichlet(mesh, problem.bc);
    State state = settings.initial_state ? *settings.initial_state : State::zero(mesh.n_vertices());
    apply_dirichlet(dirichlet, state);

    auto weak = assemble_residual(mesh, problem.props, problem.bc, dirichlet, state, problem.assembly);
    double rnorm = reconstructed_residual_norm(mesh, weak);
    const double r0 = rnorm;
    report.residual_history.push_back(rnorm);
    const double target = settings.tol * r0;

    double prev_cfl = strategy.cfl0;
    std::vector<double> dt_e(ne);

    for (int n = 1; n <= settings.max_iter; ++n) {
        if (rnorm <= target) break;
        if (settings.observer) settings.observer(n, state);
        const auto t_iter = std::chrono::steady_clock::now();

        double cfl = std::numeric_limits<double>::quiet_NaN();
        double dt_min = std::numeric_limits<double>::quiet_NaN();
        double dt_max = std::numeric_limits<double>::quiet_NaN();
        try {
            State next;
            switch (strategy.kind) {
                case StrategyKind::IterSchedule:
                case StrategyKind::ErrController: {
                    if (strategy.kind == StrategyKind::IterSchedule) {
                        cfl = cfl_iter(n);
                    } else {
                        const auto& hist = report.residual_history;
                        const int m = static_cast<int>(hist.size());
                        const double e1 = hist[m - 1] / r0;
                        std::optional<double> e2, e3;
                        if (m >= 2) e2 = hist[m - 2] / r0;
                        if (m >= 3) e3 = hist[m - 3] / r0;
                        cfl = cfl_err(e1, e2, e3, prev_cfl, strategy);
                        prev_cfl = cfl;
                    }
                    for (int e = 0; e < ne; ++e)
                        dt_e[e] = local_dt(cfl, mesh.h[e], element_speed(mesh, state, e),
                                           settings.eps_u);
                    next = ptc_step(problem, dirichlet, state, dt_e).state;
                    break;
                }
                case StrategyKind::Learned: {
                    const auto strong = strong_residuals(mesh, problem.props, state);
                    for (int e = 0; e < ne; ++e) {
                        const FeatureVector fv = extract_patch(mesh, state, weak, strong,
                                                               problem.props, e, settings.eps_u);
                        double dt = strategy.model->predict_dt(fv);
                        if (!std::isfinite(dt) || dt < strategy.dt_floor) dt = strategy.dt_floor;
                        dt_e[e] = std::min(dt, strategy.dt_cap);
                    }
                    next = ptc_step(problem, dirichlet, state, dt_e).state;
                    break;
                }
                case StrategyKind::NewtonConstant: {
                    const StepResult s = newton_step(problem, dirichlet, state);
                    auto flat = state.flat();
                    for (std::size_t i = 0; i < flat.size(); ++i)
                        flat[i] += strategy.damping * s.step[i];
                    next = State::from_flat(flat);
                    break;
                }
                case StrategyKind::NewtonAdaptive: {
                    const StepResult s = newton_step(problem, dirichlet, state);
                    next = newton_adaptive_step(problem, dirichlet, state, s.step,
                                                strategy.lambda_min)
                               .state;
                    break;
                }
            }
            state = std::move(next);
            weak = assemble_residual(mesh, problem.props, problem.bc, dirichlet, state, problem.assembly);
            rnorm = reconstructed_residual_norm(mesh, weak);
        } catch (const SingularMatrixError& err) {
            report.failure = std::string("linear solver: ") + err.what();
        } catch (const std::domain_error& err) {
            report.failure = std::string("diverged: ") + err.what();
        }

        if (!report.failure.empty() || !std::isfinite(rnorm)) {
            if (report.failure.empty()) report.failure = "diverged: non-finite residual norm";
            report.iterations = n;
            report.residual_history.push_back(std::numeric_limits<double>::quiet_NaN());
            report.cfl_history.push_back(cfl);
            if (!dt_e.empty() && strategy.kind != StrategyKind::NewtonConstant &&
                strategy.kind != StrategyKind::NewtonAdaptive) {
                dt_min = *std::min_element(dt_e.begin(), dt_e.end());
                dt_max = *std::max_element(dt_e.begin(), dt_e.end());
            }
            report.min_dt_history.push_back(dt_min);
            report.max_dt_history.push_back(dt_max);
            report.wall_ms_history.push_back(
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_iter)
                    .count());
            break;
        }

        if (strategy.kind != StrategyKind::NewtonConstant &&
            strategy.kind != StrategyKind::NewtonAdaptive) {
            dt_min = *std::min_element(dt_e.begin(), dt_e.end());
            dt_max = *std::max_element(dt_e.begin(), dt_e.end());
        }
        report.iterations = n;
        report.residual_history.push_back(rnorm);
        report.cfl_history.push_back(cfl);
        report.min_dt_history.push_back(dt_min);
        report.max_dt_history.push_back(dt_max);
        report.wall_ms_history.push_back(
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_iter)
                .count());
    }

    report.converged = report.failure.empty() && rnorm <= target;
    report.final_state = std::move(state);
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return report;
}

void save_report_csv(const SolveReport& report, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("save_report_csv: cannot open " + path);
    f << "iter,residual,global_cfl,min_dt,max_dt,wall_ms\n";
    char buf[32];
    auto put = [&](double x) {
        std::snprintf(buf, sizeof buf, "%.17g", x);
        f << buf;
    };
    for (std::size_t k = 1; k < report.residual_history.size(); ++k) {
        f << k << ",";
        put(report.residual_history[k]);
        f << ",";
        put(report.cfl_history[k - 1]);
        f << ",";
        put(report.min_dt_history[k - 1]);
        f << ",";
        put(report.max_dt_history[k - 1]);
        f << ",";
        put(report.wall_ms_history[k - 1]);
        f << "\n";
    }
}

}  // namespace ptcflow
