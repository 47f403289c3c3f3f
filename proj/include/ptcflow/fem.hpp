#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "ptcflow/mesh.hpp"
#include "ptcflow/sparse.hpp"

namespace ptcflow {

struct FluidProps {
    double rho = 1000.0;  // kg/m^3
    double mu = 1e-3;     // Pa s
    std::array<double, 2> body_force = {0.0, 0.0};  // N/m^3

    double nu() const { return mu / rho; }
};

// Nodal coefficients of the P1 velocity/pressure fields. The flat layout is
// [u_0..u_{N-1}, v_0..v_{N-1}, p_0..p_{N-1}].
struct State {
    std::vector<double> u, v, p;

    static State zero(int n_vertices) {
        State s;
        s.u.assign(n_vertices, 0.0);
        s.v.assign(n_vertices, 0.0);
        s.p.assign(n_vertices, 0.0);
        return s;
    }
    int n_vertices() const { return static_cast<int>(u.size()); }
    std::vector<double> flat() const;
    static State from_flat(const std::vector<double>& x);
};

struct BoundaryConditions {
    double inlet_peak_velocity = 0.0;  // m/s, parabolic profile maximum
    double outlet_pressure = 0.0;      // Pa
    double moving_wall_speed = 0.0;    // m/s, counter-clockwise tangential
};

// Dirichlet constraints over the flat dof vector.
struct DirichletBc {
    std::vector<std::uint8_t> fixed;  // size 3N
    std::vector<double> value;        // size 3N
};

// Derives the constrained dofs from the mesh boundary tags: parabolic inlet
// along the inward normal, no-slip walls, tangential moving wall. Enclosed
// domains (no outlet edges) get the pressure pinned at vertex 0.
DirichletBc build_dirichlet(const Mesh& mesh, const BoundaryConditions& bc);

// Imposes the Dirichlet values onto a state (the initial-guess lift).
void apply_dirichlet(const DirichletBc& bc, State& state);

// Frozen per-element stabilization coefficients.
struct StabCoeffs {
    std::vector<double> tau;    // GLS/SUPG/PSPG parameter (s)
    std::vector<double> delta;  // grad-div parameter (m^2/s)
};

StabCoeffs compute_stab_coeffs(const Mesh& mesh, const FluidProps& props, const State& state);

struct AssemblyOpts {
    bool convection = true;      // test hook for the Stokes limit
    bool stabilization = true;
    bool apply_dirichlet = true;
    // When set, stabilization uses these coefficients instead of recomputing
    // them from the state (used by the Jacobian consistency check).
    const StabCoeffs* frozen_stab = nullptr;
};

std::vector<double> assemble_residual(const Mesh& mesh, const FluidProps& props,
                                      const BoundaryConditions& bc, const DirichletBc& dirichlet,
                                      const State& state, const AssemblyOpts& opts = {});

SparseMatrix assemble_jacobian(const Mesh& mesh, const FluidProps& props,
                               const BoundaryConditions& bc, const DirichletBc& dirichlet,
                               const State& state, const AssemblyOpts& opts = {});

// Row-sum lumped velocity mass diagonal scaled by rho / dt_e, zero on the
// pressure block. No Dirichlet filtering.
std::vector<double> ptc_mass_diagonal(const Mesh& mesh, const FluidProps& props,
                                      const std::vector<double>& dt_e);

// M(dt) + F'(v); Dirichlet rows stay identity.
SparseMatrix assemble_ptc_matrix(const Mesh& mesh, const FluidProps& props,
                                 const BoundaryConditions& bc, const DirichletBc& dirichlet,
                                 const State& state, const std::vector<double>& dt_e,
                                 const AssemblyOpts& opts = {});

// Pointwise PDE residual of the discrete solution; second derivatives vanish
// on linear elements. r_u/r_v vary over the element vertices, r_p is constant
// per element.
struct StrongResiduals {
    std::vector<std::array<double, 3>> ru, rv;
    std::vector<double> rp;
};

StrongResiduals strong_residuals(const Mesh& mesh, const FluidProps& props, const State& state);

// L2 norm over the domain of the P1 fields whose nodal coefficients are the
// three components of the given flat vector (the stopping-criterion norm).
double reconstructed_residual_norm(const Mesh& mesh, const std::vector<double>& coeffs);

// Same norm restricted to the two velocity components.
double velocity_l2_norm(const Mesh& mesh, const std::vector<double>& coeffs);

// Consistent P1 mass applied to the u and v blocks of a flat vector; the
// pressure block of the result is zero.
std::vector<double> velocity_mass_apply(const Mesh& mesh, const std::vector<double>& coeffs);

// Euclidean norm of the velocity at the element centroid.
double element_speed(const Mesh& mesh, const State& state, int e);

}  // namespace ptcflow
