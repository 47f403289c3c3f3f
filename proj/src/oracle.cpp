#include "ptcflow/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <numeric>

#include "ptcflow/linsolve.hpp"
#include "ptcflow/rng.hpp"

namespace ptcflow {

State reference_solution(const Problem& problem, const OracleSettings& settings) {
    SolveSettings ss;
    ss.tol = settings.ref_tol;
    ss.max_iter = settings.ref_max_iter;
    ss.eps_u = settings.eps_u;
    SolveReport direct = solve_nonlinear(problem, CflStrategy::iter_schedule(), ss);
    if (direct.converged) return std::move(direct.final_state);

    // viscosity continuation, warm-starting each stage
    State warm = State::zero(problem.mesh.n_vertices());
    bool have_warm = false;
    for (double factor : {10.0, 3.0, 1.0}) {
        Problem staged = problem;
        staged.props.mu = problem.props.mu * factor;
        SolveSettings stage_ss = ss;
        if (have_warm) stage_ss.initial_state = &warm;
        SolveReport r = solve_nonlinear(staged, CflStrategy::iter_schedule(), stage_ss);
        if (factor == 1.0 && r.converged) return std::move(r.final_state);
        if (r.converged) {
            warm = std::move(r.final_state);
            have_warm = true;
        }
    }
    throw OracleUnavailableError("reference_solution: no baseline converged for this configuration");
}

PtcObjective::PtcObjective(const Problem& problem, const DirichletBc& dirichlet, const State& vn,
                           const State& vstar)
    : problem_(&problem), dirichlet_(&dirichlet) {
    jacobian_ = assemble_jacobian(problem.mesh, problem.props, problem.bc, dirichlet, vn,
                                   problem.assembly);
    residual_ = assemble_residual(problem.mesh, problem.props, problem.bc, dirichlet, vn,
                                   problem.assembly);
    vn_flat_ = vn.flat();
    vstar_flat_ = vstar.flat();
}

double PtcObjective::eval(const std::vector<double>& theta, std::vector<double>* grad) const {
    const Mesh& mesh = problem_->mesh;
    const int ne = mesh.n_elements();
    const int n = mesh.n_vertices();
    if (static_cast<int>(theta.size()) != ne)
        throw std::invalid_argument("PtcObjective: theta length mismatch");

    std::vector<double> dt(ne);
    for (int e = 0; e < ne; ++e) dt[e] = std::exp(theta[e]);

    SparseMatrix A = jacobian_;
    const auto mass = ptc_mass_diagonal(mesh, problem_->props, dt);
    for (int i = 0; i < 3 * n; ++i) {
        if (dirichlet_->fixed[i]) continue;
        if (mass[i] != 0.0) A.add_to_diagonal(i, mass[i]);
    }
    const Factorization lu(A);
    const std::vector<double> x = lu.solve(residual_);  // step = -x

    std::vector<double> d(3 * n);
    for (int i = 0; i < 3 * n; ++i) d[i] = vn_flat_[i] - x[i] - vstar_flat_[i];
    const auto md = velocity_mass_apply(mesh, d);
    double G = 0.0;
    for (int i = 0; i < 2 * n; ++i) G += d[i] * md[i];
    G *= 0.5;

    if (grad) {
        const std::vector<double> y = lu.solve_transposed(md);
        grad->assign(ne, 0.0);
        for (int e = 0; e < ne; ++e) {
            const double m = problem_->props.rho * mesh.element_area(e) / 3.0 / dt[e];
            double s = 0.0;
            for (int k = 0; k < 3; ++k) {
                const int vu = mesh.elements[e][k];
                const int vv = n + vu;
                if (!dirichlet_->fixed[vu]) s += y[vu] * x[vu];
                if (!dirichlet_->fixed[vv]) s += y[vv] * x[vv];
            }
            (*grad)[e] = -m * s;
        }
    }
    return G;
}

double PtcObjective::value(const std::vector<double>& theta) const { return eval(theta, nullptr); }

double PtcObjective::value_and_gradient(const std::vector<double>& theta,
                                        std::vector<double>& grad) const {
    return eval(theta, &grad);
}

double PtcObjective::step_distance(const std::vector<double>& dt) const {
    std::vector<double> theta(dt.size());
    for (std::size_t e = 0; e < dt.size(); ++e) theta[e] = std::log(dt[e]);
    return std::sqrt(2.0 * value(theta));
}

MinimizeResult minimize_bounded(
    const std::function<double(const std::vector<double>&, std::vector<double>*)>& objective,
    std::vector<double> x0, double lo, double hi, int max_grad_evals, double rel_decrease) {
    const std::size_t n = x0.size();
    auto project = [&](std::vector<double>& t) {
        for (double& v : t) v = std::clamp(v, lo, hi);
    };
    project(x0);

    MinimizeResult result;
    std::vector<double> x = std::move(x0);
    std::vector<double> grad;
    double G = objective(x, &grad);
    result.grad_evals = 1;

    const int memory = 8;
    std::deque<std::vector<double>> s_hist, y_hist;
    std::deque<double> rho_hist;

    while (result.grad_evals < max_grad_evals) {
        // two-loop recursion for the search direction
        std::vector<double> dir(grad.begin(), grad.end());
        std::vector<double> alpha(s_hist.size());
        for (int i = static_cast<int>(s_hist.size()) - 1; i >= 0; --i) {
            alpha[i] = rho_hist[i] *
                       std::inner_product(s_hist[i].begin(), s_hist[i].end(), dir.begin(), 0.0);
            for (std::size_t e = 0; e < n; ++e) dir[e] -= alpha[i] * y_hist[i][e];
        }
        if (!s_hist.empty()) {
            const auto& sl = s_hist.back();
            const auto& yl = y_hist.back();
            const double sy = std::inner_product(sl.begin(), sl.end(), yl.begin(), 0.0);
            const double yy = std::inner_product(yl.begin(), yl.end(), yl.begin(), 0.0);
            if (yy > 0.0)
                for (double& v : dir) v *= sy / yy;
        }
        for (std::size_t i = 0; i < s_hist.size(); ++i) {
            const double beta = rho_hist[i] * std::inner_product(y_hist[i].begin(),
                                                                 y_hist[i].end(), dir.begin(), 0.0);
            for (std::size_t e = 0; e < n; ++e) dir[e] += (alpha[i] - beta) * s_hist[i][e];
        }
        for (double& v : dir) v = -v;
        const double descent = std::inner_product(dir.begin(), dir.end(), grad.begin(), 0.0);
        if (descent >= 0.0) {  // fall back to steepest descent
            for (std::size_t e = 0; e < n; ++e) dir[e] = -grad[e];
        }

        double step = 1.0;
        bool accepted = false;
        std::vector<double> x_new;
        double G_new = G;
        for (int ls = 0; ls < 30 && !accepted; ++ls) {
            x_new = x;
            for (std::size_t e = 0; e < n; ++e) x_new[e] += step * dir[e];
            project(x_new);
            double trial;
            try {
                trial = objective(x_new, nullptr);
            } catch (const SingularMatrixError&) {
                trial = std::numeric_limits<double>::infinity();
            }
            if (trial < G) {
                G_new = trial;
                accepted = true;
            } else {
                step *= 0.5;
            }
        }
        if (!accepted) break;  // the best feasible point found so far stands

        std::vector<double> grad_new;
        try {
            G_new = objective(x_new, &grad_new);
        } catch (const SingularMatrixError&) {
            break;
        }
        ++result.grad_evals;

        std::vector<double> s_vec(n), y_vec(n);
        for (std::size_t e = 0; e < n; ++e) {
            s_vec[e] = x_new[e] - x[e];
            y_vec[e] = grad_new[e] - grad[e];
        }
        const double sy = std::inner_product(s_vec.begin(), s_vec.end(), y_vec.begin(), 0.0);
        const double ss = std::inner_product(s_vec.begin(), s_vec.end(), s_vec.begin(), 0.0);
        if (sy > 1e-12 * std::sqrt(ss) * std::sqrt(std::inner_product(y_vec.begin(), y_vec.end(),
                                                                      y_vec.begin(), 0.0))) {
            s_hist.push_back(std::move(s_vec));
            y_hist.push_back(std::move(y_vec));
            rho_hist.push_back(1.0 / sy);
            if (static_cast<int>(s_hist.size()) > memory) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
        }

        const double decrease = G - G_new;
        x = std::move(x_new);
        grad = std::move(grad_new);
        G = G_new;
        if (decrease < rel_decrease * std::max(G, 1e-300)) break;
    }
    result.x = std::move(x);
    result.value = G;
    return result;
}

OptimalDtResult optimal_dt(const Problem& problem, const DirichletBc& dirichlet, const State& vn,
                           const State& vstar, int newton_iter_n, const OracleSettings& settings) {
    const Mesh& mesh = problem.mesh;
    const int ne = mesh.n_elements();
    const double lo = std::log(settings.dt_lo), hi = std::log(settings.dt_hi);

    const double cfl = cfl_iter(newton_iter_n);
    std::vector<double> theta(ne);
    for (int e = 0; e < ne; ++e) {
        const double dt = local_dt(cfl, mesh.h[e], element_speed(mesh, vn, e), settings.eps_u);
        theta[e] = std::clamp(std::log(dt), lo, hi);
    }

    const PtcObjective objective(problem, dirichlet, vn, vstar);

    OptimalDtResult result;
    result.objective_init = std::sqrt(2.0 * objective.value(theta));

    const MinimizeResult min = minimize_bounded(
        [&](const std::vector<double>& t, std::vector<double>* g) {
            return g ? objective.value_and_gradient(t, *g) : objective.value(t);
        },
        theta, lo, hi, settings.max_grad_evals, settings.obj_rel_decrease);

    result.grad_evals = min.grad_evals;
    result.objective_final = std::sqrt(2.0 * min.value);
    result.dt.resize(ne);
    for (int e = 0; e < ne; ++e) result.dt[e] = std::exp(min.x[e]);
    return result;
}

DataGenResult generate_dataset(const std::vector<DataGenConfig>& configs, std::uint64_t seed,
                               std::ostream* manifest, std::size_t group_cap,
                               const OracleSettings& settings) {
    DataGenResult result;
    if (manifest) *manifest << "seed " << seed << "\n";

    std::vector<double> group_key;  // h_max per sample
    for (const auto& cfg : configs) {
        Problem problem;
        problem.props = cfg.props;
        problem.bc = cfg.bc;
        try {
            problem.mesh = generate_mesh(cfg.geometry, cfg.h_max);
        } catch (const std::invalid_argument& err) {
            result.skipped.push_back(cfg.id);
            if (manifest) *manifest << "skip " << cfg.id << " mesh: " << err.what() << "\n";
            continue;
        }

        State vstar;
        try {
            vstar = reference_solution(problem, settings);
        } catch (const OracleUnavailableError& err) {
            result.skipped.push_back(cfg.id);
            if (manifest) *manifest << "skip " << cfg.id << " oracle: " << err.what() << "\n";
            continue;
        }

        // record the baseline linearization states at the snapshot iterations
        std::map<int, State> snapshots;
        SolveSettings ss;
        ss.eps_u = settings.eps_u;
        ss.observer = [&](int n, const State& v) {
            if (std::find(cfg.snapshots.begin(), cfg.snapshots.end(), n) != cfg.snapshots.end())
                snapshots.emplace(n, v);
        };
        solve_nonlinear(problem, CflStrategy::iter_schedule(), ss);

        const DirichletBc dirichlet = build_dirichlet(problem.mesh, problem.bc);
        for (const auto& [iter_n, vn] : snapshots) {
            OptimalDtResult opt = optimal_dt(problem, dirichlet, vn, vstar, iter_n, settings);

            SnapshotDiag diag;
            diag.config_id = cfg.id;
            diag.iter = iter_n;
            const PtcObjective obj(problem, dirichlet, vn, vstar);
            std::vector<double> dt_base(problem.mesh.n_elements());
            const double cfl = cfl_iter(iter_n);
            for (int e = 0; e < problem.mesh.n_elements(); ++e)
                dt_base[e] = std::clamp(local_dt(cfl, problem.mesh.h[e],
                                                 element_speed(problem.mesh, vn, e), settings.eps_u),
                                        settings.dt_lo, settings.dt_hi);
            diag.dist_baseline = obj.step_distance(dt_base);
            diag.dist_optimal = obj.step_distance(opt.dt);
            diag.samples = problem.mesh.n_elements();
            result.snapshots.push_back(diag);

            const auto weak =
                assemble_residual(problem.mesh, problem.props, problem.bc, dirichlet, vn,
                                   problem.assembly);
            const auto strong = strong_residuals(problem.mesh, problem.props, vn);
            for (int e = 0; e < problem.mesh.n_elements(); ++e) {
                result.dataset.features.push_back(
                    extract_patch(problem.mesh, vn, weak, strong, problem.props, e, settings.eps_u));
                result.dataset.targets.push_back(opt.dt[e]);
                result.dataset.provenance.push_back({cfg.id, iter_n, e});
                group_key.push_back(cfg.h_max);
            }
            if (manifest)
                *manifest << "snapshot " << cfg.id << " iter " << iter_n << " dist_base "
                          << diag.dist_baseline << " dist_opt " << diag.dist_optimal << " samples "
                          << diag.samples << "\n";
        }
        for (int want : cfg.snapshots)
            if (!snapshots.count(want) && manifest)
                *manifest << "note " << cfg.id << " iteration " << want
                          << " not reached by the baseline\n";
    }

    result.samples_before_balancing = result.dataset.size();

    // balance counts per mesh-size group
    std::map<double, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < group_key.size(); ++i) groups[group_key[i]].push_back(i);
    std::size_t keep = group_cap;
    for (const auto& [h, idx] : groups) keep = std::min(keep, idx.size());

    Rng rng(seed);
    std::vector<std::size_t> chosen;
    for (auto& [h, idx] : groups) {
        rng.shuffle(idx);
        chosen.insert(chosen.end(), idx.begin(), idx.begin() + keep);
    }
    std::sort(chosen.begin(), chosen.end());

    Dataset balanced;
    for (std::size_t i : chosen) {
        balanced.features.push_back(result.dataset.features[i]);
        balanced.targets.push_back(result.dataset.targets[i]);
        balanced.provenance.push_back(result.dataset.provenance[i]);
    }
    result.dataset = std::move(balanced);
    assign_splits(result.dataset, seed ^ 0x5eed5eedULL);

    if (manifest) {
        *manifest << "groups " << groups.size() << " kept_per_group " << keep << "\n";
        *manifest << "samples_before_balancing " << result.samples_before_balancing << "\n";
        *manifest << "samples " << result.dataset.size() << "\n";
        std::size_t ntr = 0, nte = 0, nva = 0;
        for (Split s : result.dataset.split) {
            if (s == Split::Train) ++ntr;
            else if (s == Split::Test) ++nte;
            else ++nva;
        }
        *manifest << "split train " << ntr << " test " << nte << " validation " << nva << "\n";
    }
    return result;
}

}  // namespace ptcflow
