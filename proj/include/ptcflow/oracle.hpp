#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "ptcflow/dataset.hpp"
#include "ptcflow/ptc.hpp"

namespace ptcflow {

class OracleUnavailableError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct OracleSettings {
    double ref_tol = 1e-10;
    int ref_max_iter = 150;
    int max_grad_evals = 200;
    double obj_rel_decrease = 1e-8;
    double dt_lo = 1e-12, dt_hi = 1e12;  // bounds for exp(theta)
    double eps_u = 1e-10;
};

// Converged state F(v*) ~ 0 via the iteration-schedule baseline; on failure
// retries with viscosity continuation (10x, 3x, 1x mu, warm-started).
State reference_solution(const Problem& problem, const OracleSettings& settings = {});

// Half squared velocity-L2 distance of the next PTC iterate to vstar, as a
// function of theta_e = log(dt_e), with its adjoint gradient. F and F' are
// fixed at vn; each evaluation costs one factorization.
class PtcObjective {
public:
    PtcObjective(const Problem& problem, const DirichletBc& dirichlet, const State& vn,
                 const State& vstar);

    double value(const std::vector<double>& theta) const;
    double value_and_gradient(const std::vector<double>& theta, std::vector<double>& grad) const;

    // velocity-L2 distance of the iterate after one step with the given dt
    double step_distance(const std::vector<double>& dt) const;

    int n_elements() const { return static_cast<int>(problem_->mesh.n_elements()); }

private:
    double eval(const std::vector<double>& theta, std::vector<double>* grad) const;

    const Problem* problem_;
    const DirichletBc* dirichlet_;
    SparseMatrix jacobian_;
    std::vector<double> residual_;
    std::vector<double> vn_flat_, vstar_flat_;
};

struct OptimalDtResult {
    std::vector<double> dt;
    double objective_init = 0.0;   // velocity-L2 distance at the baseline dt
    double objective_final = 0.0;  // distance at the optimized dt
    int grad_evals = 0;
};

struct MinimizeResult {
    std::vector<double> x;
    double value = 0.0;
    int grad_evals = 0;
};

// Projected limited-memory quasi-Newton descent with box bounds and a
// monotone backtracking line search. The objective callback fills the
// gradient when the pointer is non-null. Accepted iterates never increase
// the objective.
MinimizeResult minimize_bounded(
    const std::function<double(const std::vector<double>&, std::vector<double>*)>& objective,
    std::vector<double> x0, double lo, double hi, int max_grad_evals = 200,
    double rel_decrease = 1e-8);

// Bound-constrained limited-memory quasi-Newton minimization of the step
// objective in log(dt), started from the iteration-schedule step for
// iteration n.
OptimalDtResult optimal_dt(const Problem& problem, const DirichletBc& dirichlet, const State& vn,
                           const State& vstar, int newton_iter_n,
                           const OracleSettings& settings = {});

struct DataGenConfig {
    std::string id;
    GeometrySpec geometry;
    double h_max = 0.0;
    FluidProps props;
    BoundaryConditions bc;
    std::vector<int> snapshots = {1, 10};
};

struct SnapshotDiag {
    std::string config_id;
    int iter = 0;
    double dist_baseline = 0.0;  // one IterSchedule step, velocity-L2 to vstar
    double dist_optimal = 0.0;   // one step with the optimized dt
    int samples = 0;
};

struct DataGenResult {
    Dataset dataset;
    std::vector<SnapshotDiag> snapshots;
    std::vector<std::string> skipped;  // config ids with unavailable oracles
    std::size_t samples_before_balancing = 0;
};

// Runs the full target-generation pipeline: reference solutions, baseline
// snapshots, per-snapshot dt optimization, feature extraction, per-mesh-size
// balancing and the 70/15/15 split. `group_cap` additionally caps each
// mesh-size group.
DataGenResult generate_dataset(const std::vector<DataGenConfig>& configs, std::uint64_t seed,
                               std::ostream* manifest = nullptr,
                               std::size_t group_cap = SIZE_MAX,
                               const OracleSettings& settings = {});

}  // namespace ptcflow
