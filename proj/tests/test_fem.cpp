#include <cmath>
#include <vector>

#include "doctest.h"
#include "ptcflow/fem.hpp"
#include "ptcflow/linsolve.hpp"
#include "ptcflow/mesh.hpp"
#include "ptcflow/rng.hpp"

using namespace ptcflow;

namespace {

Mesh single_triangle() {
    Mesh m;
    m.vertices = {{0, 0}, {1, 0}, {0, 1}};
    m.elements = {{0, 1, 2}};
    m.boundary_edges = {{0, 1, BoundaryTag::Wall}, {1, 2, BoundaryTag::Wall}, {2, 0, BoundaryTag::Wall}};
    m.finalize();
    return m;
}

GeometrySpec small_backstep() {
    GeometrySpec g;
    g.kind = GeometryKind::BackStep;
    g.inflow_width = 0.4;
    g.inflow_length = 0.5;
    g.outflow_width = 0.8;
    g.outflow_length = 1.0;
    return g;
}

DirichletBc no_constraints(const Mesh& mesh) {
    DirichletBc d;
    d.fixed.assign(3 * mesh.n_vertices(), 0);
    d.value.assign(3 * mesh.n_vertices(), 0.0);
    return d;
}

State random_state(const Mesh& mesh, Rng& rng, double scale) {
    State s = State::zero(mesh.n_vertices());
    for (int i = 0; i < mesh.n_vertices(); ++i) {
        s.u[i] = scale * rng.normal();
        s.v[i] = scale * rng.normal();
        s.p[i] = scale * rng.normal();
    }
    return s;
}

double norm2(const std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

// relative error of J d against a central difference of the residual with
// the stabilization coefficients frozen at the linearization state
double jacobian_fd_error(const Mesh& mesh, const FluidProps& props, const BoundaryConditions& bc,
                         const DirichletBc& dirichlet, const State& state, Rng& rng) {
    const StabCoeffs frozen = compute_stab_coeffs(mesh, props, state);
    AssemblyOpts opts;
    opts.frozen_stab = &frozen;

    const SparseMatrix J = assemble_jacobian(mesh, props, bc, dirichlet, state, opts);
    const auto flat0 = state.flat();
    std::vector<double> dir(flat0.size());
    for (auto& v : dir) v = rng.normal();

    double scale = 0.0;
    for (double v : flat0) scale = std::max(scale, std::abs(v));
    const double eps = 1e-6 * std::max(1.0, scale);

    auto flat_p = flat0, flat_m = flat0;
    for (std::size_t i = 0; i < flat0.size(); ++i) {
        flat_p[i] += eps * dir[i];
        flat_m[i] -= eps * dir[i];
    }
    const auto Fp = assemble_residual(mesh, props, bc, dirichlet, State::from_flat(flat_p), opts);
    const auto Fm = assemble_residual(mesh, props, bc, dirichlet, State::from_flat(flat_m), opts);
    const auto Jd = J.multiply(dir);
    std::vector<double> diff(Fp.size());
    for (std::size_t i = 0; i < Fp.size(); ++i) diff[i] = (Fp[i] - Fm[i]) / (2.0 * eps) - Jd[i];
    return norm2(diff) / std::max(norm2(Jd), 1e-300);
}

}  // namespace

TEST_CASE("constant fields annihilate the residual on an unconstrained element") {
    const Mesh mesh = single_triangle();
    FluidProps props;
    props.rho = 1000.0;
    props.mu = 1e-3;
    State s = State::zero(mesh.n_vertices());
    for (int i = 0; i < 3; ++i) {
        s.u[i] = 0.3;
        s.v[i] = -0.7;
        s.p[i] = 0.0;
    }
    AssemblyOpts opts;
    opts.apply_dirichlet = false;
    const auto F = assemble_residual(mesh, props, {}, no_constraints(mesh), s, opts);
    for (double v : F) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("doubling rho doubles the convective block") {
    const Mesh mesh = generate_mesh(small_backstep(), 0.3);
    Rng rng(5);
    const State s = random_state(mesh, rng, 0.5);
    AssemblyOpts galerkin;
    galerkin.stabilization = false;
    galerkin.apply_dirichlet = false;
    AssemblyOpts stokes = galerkin;
    stokes.convection = false;

    const DirichletBc none = no_constraints(mesh);
    FluidProps props1;
    props1.rho = 1.0;
    props1.mu = 0.01;
    FluidProps props2 = props1;
    props2.rho = 2.0;

    const auto full1 = assemble_residual(mesh, props1, {}, none, s, galerkin);
    const auto stokes1 = assemble_residual(mesh, props1, {}, none, s, stokes);
    const auto full2 = assemble_residual(mesh, props2, {}, none, s, galerkin);
    const auto stokes2 = assemble_residual(mesh, props2, {}, none, s, stokes);
    const int n = mesh.n_vertices();
    for (int i = 0; i < 2 * n; ++i) {  // momentum rows
        const double conv1 = full1[i] - stokes1[i];
        const double conv2 = full2[i] - stokes2[i];
        CHECK(conv2 == doctest::Approx(2.0 * conv1).epsilon(1e-12).scale(1e-12));
    }
}

TEST_CASE("Jacobian matches central finite differences on random states") {
    const Mesh mesh = generate_mesh(small_backstep(), 0.39);
    REQUIRE(mesh.n_elements() <= 50);
    FluidProps props;
    props.rho = 1.0;
    props.mu = 0.05;
    BoundaryConditions bc;
    bc.inlet_peak_velocity = 1.0;
    const DirichletBc dirichlet = build_dirichlet(mesh, bc);

    Rng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        State s = random_state(mesh, rng, 1.0);
        CHECK(jacobian_fd_error(mesh, props, bc, dirichlet, s, rng) < 1e-5);
    }
}

TEST_CASE("Jacobian at rest is the stabilized Stokes operator") {
    const Mesh mesh = generate_mesh(small_backstep(), 0.35);
    FluidProps props;
    props.rho = 1.0;
    props.mu = 0.1;
    const DirichletBc none = no_constraints(mesh);
    AssemblyOpts opts;
    opts.apply_dirichlet = false;
    AssemblyOpts no_conv = opts;
    no_conv.convection = false;

    const State zero = State::zero(mesh.n_vertices());
    const SparseMatrix J = assemble_jacobian(mesh, props, {}, none, zero, opts);
    const SparseMatrix S = assemble_jacobian(mesh, props, {}, none, zero, no_conv);
    REQUIRE(J.nnz() == S.nnz());
    for (int k = 0; k < J.nnz(); ++k) CHECK(J.values[k] == doctest::Approx(S.values[k]).epsilon(1e-14));
}

TEST_CASE("Dirichlet rows are identity rows") {
    const Mesh mesh = generate_mesh(small_backstep(), 0.3);
    BoundaryConditions bc;
    bc.inlet_peak_velocity = 0.5;
    const DirichletBc dirichlet = build_dirichlet(mesh, bc);
    Rng rng(2);
    const State s = random_state(mesh, rng, 0.3);
    const SparseMatrix J = assemble_jacobian(mesh, {}, bc, dirichlet, s);
    for (int i = 0; i < 3 * mesh.n_vertices(); ++i) {
        if (!dirichlet.fixed[i]) continue;
        for (int k = J.row_ptr[i]; k < J.row_ptr[i + 1]; ++k)
            CHECK(J.values[k] == (J.col_idx[k] == i ? 1.0 : 0.0));
    }
}

TEST_CASE("huge dt makes the PTC matrix collapse to the Jacobian") {
    const Mesh mesh = generate_mesh(small_backstep(), 0.3);
    FluidProps props;
    props.rho = 1.0;
    props.mu = 1.0;
    BoundaryConditions bc;
    bc.inlet_peak_velocity = 1.0;
    const DirichletBc dirichlet = build_dirichlet(mesh, bc);
    Rng rng(8);
    const State s = random_state(mesh, rng, 0.5);

    const SparseMatrix J = assemble_jacobian(mesh, props, bc, dirichlet, s);
    const std::vector<double> dt(mesh.n_elements(), 1e12);
    const SparseMatrix A = assemble_ptc_matrix(mesh, props, bc, dirichlet, s, dt);
    REQUIRE(A.nnz() == J.nnz());
    double num = 0.0;
    for (int k = 0; k < J.nnz(); ++k) num += (A.values[k] - J.values[k]) * (A.values[k] - J.values[k]);
    CHECK(std::sqrt(num) / J.frobenius_norm() < 1e-8);
}

TEST_CASE("pressure rows of the PTC matrix equal the Jacobian rows") {
    const Mesh mesh = generate_mesh(small_backstep(), 0.3);
    BoundaryConditions bc;
    bc.inlet_peak_velocity = 1.0;
    const DirichletBc dirichlet = build_dirichlet(mesh, bc);
    Rng rng(4);
    const State s = random_state(mesh, rng, 0.5);
    const SparseMatrix J = assemble_jacobian(mesh, {}, bc, dirichlet, s);
    const std::vector<double> dt(mesh.n_elements(), 0.37);
    const SparseMatrix A = assemble_ptc_matrix(mesh, {}, bc, dirichlet, s, dt);
    const int n = mesh.n_vertices();
    for (int i = 2 * n; i < 3 * n; ++i)
        for (int k = J.row_ptr[i]; k < J.row_ptr[i + 1]; ++k) CHECK(A.values[k] == J.values[k]);
}

TEST_CASE("halving dt doubles the lumped mass diagonal") {
    const Mesh mesh = generate_mesh(small_backstep(), 0.3);
    FluidProps props;
    const std::vector<double> dt1(mesh.n_elements(), 0.2);
    const std::vector<double> dt2(mesh.n_elements(), 0.1);
    const auto m1 = ptc_mass_diagonal(mesh, props, dt1);
    const auto m2 = ptc_mass_diagonal(mesh, props, dt2);
    const int n = mesh.n_vertices();
    for (int i = 0; i < 2 * n; ++i) {
        CHECK(m1[i] > 0.0);
        CHECK(m2[i] == doctest::Approx(2.0 * m1[i]).epsilon(1e-14));
    }
    for (int i = 2 * n; i < 3 * n; ++i) CHECK(m1[i] == 0.0);  // kernel is the pressure block
    CHECK_THROWS_AS(ptc_mass_diagonal(mesh, props, std::vector<double>(mesh.n_elements(), -1.0)),
                    std::domain_error);
}

TEST_CASE("strong residuals follow the pointwise PDE") {
    FluidProps props;
    props.rho = 1.0;
    props.mu = 1.0;

    Mesh mesh = single_triangle();
    State s = State::zero(3);

    SUBCASE("constant state gives zero") {
        for (int i = 0; i < 3; ++i) {
            s.u[i] = 2.0;
            s.v[i] = -1.0;
            s.p[i] = 5.0;
        }
        const auto r = strong_residuals(mesh, props, s);
        for (int k = 0; k < 3; ++k) {
            CHECK(r.ru[0][k] == doctest::Approx(0.0).scale(1.0));
            CHECK(r.rv[0][k] == doctest::Approx(0.0).scale(1.0));
        }
        CHECK(r.rp[0] == doctest::Approx(0.0).scale(1.0));
    }

    SUBCASE("pure pressure gradient p = x gives r_u = 1") {
        for (int i = 0; i < 3; ++i) s.p[i] = mesh.vertices[i][0];
        const auto r = strong_residuals(mesh, props, s);
        for (int k = 0; k < 3; ++k) {
            CHECK(r.ru[0][k] == doctest::Approx(1.0));
            CHECK(r.rv[0][k] == doctest::Approx(0.0).scale(1.0));
        }
    }

    SUBCASE("rigid rotation u=-y v=x gives r_u=-x r_v=-y at the vertices") {
        Mesh m = generate_mesh(small_backstep(), 0.4);
        State st = State::zero(m.n_vertices());
        for (int i = 0; i < m.n_vertices(); ++i) {
            st.u[i] = -m.vertices[i][1];
            st.v[i] = m.vertices[i][0];
        }
        const auto r = strong_residuals(m, props, st);
        for (int e = 0; e < m.n_elements(); ++e)
            for (int k = 0; k < 3; ++k) {
                const auto& vtx = m.vertices[m.elements[e][k]];
                // (u.grad)u on the linear interpolant: grad u = (0,-1), grad v = (1,0)
                CHECK(r.ru[e][k] == doctest::Approx(-vtx[0]).epsilon(1e-12).scale(1.0));
                CHECK(r.rv[e][k] == doctest::Approx(-vtx[1]).epsilon(1e-12).scale(1.0));
            }
    }
}

TEST_CASE("reconstructed norm matches constants and quadrature") {
    const Mesh mesh = generate_mesh(small_backstep(), 0.25);
    const int n = mesh.n_vertices();
    std::vector<double> coeffs(3 * n, 0.0);

    SUBCASE("zero vector") { CHECK(reconstructed_residual_norm(mesh, coeffs) == 0.0); }

    SUBCASE("constant u-component equals sqrt(area)") {
        double area = 0.0;
        for (int e = 0; e < mesh.n_elements(); ++e) area += mesh.element_area(e);
        for (int i = 0; i < n; ++i) coeffs[i] = 1.0;
        CHECK(reconstructed_residual_norm(mesh, coeffs) ==
              doctest::Approx(std::sqrt(area)).epsilon(1e-12));
    }

    SUBCASE("random vector matches 3-point quadrature") {
        Rng rng(13);
        for (auto& v : coeffs) v = rng.normal();
        double quad = 0.0;
        for (int e = 0; e < mesh.n_elements(); ++e) {
            const auto& el = mesh.elements[e];
            const double w = mesh.element_area(e) / 3.0;
            // midpoints of the edges integrate quadratics exactly
            const int pairs[3][2] = {{0, 1}, {1, 2}, {2, 0}};
            for (int c = 0; c < 3; ++c)
                for (const auto& pr : pairs) {
                    const double val = 0.5 * (coeffs[c * n + el[pr[0]]] + coeffs[c * n + el[pr[1]]]);
                    quad += w * val * val;
                }
        }
        CHECK(reconstructed_residual_norm(mesh, coeffs) ==
              doctest::Approx(std::sqrt(quad)).epsilon(1e-12));
    }
}

TEST_CASE("velocity mass apply is consistent with the velocity norm") {
    const Mesh mesh = generate_mesh(small_backstep(), 0.3);
    Rng rng(21);
    std::vector<double> x(3 * mesh.n_vertices());
    for (auto& v : x) v = rng.normal();
    const auto mx = velocity_mass_apply(mesh, x);
    double dot = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) dot += x[i] * mx[i];
    const double norm = velocity_l2_norm(mesh, x);
    CHECK(std::sqrt(dot) == doctest::Approx(norm).epsilon(1e-12));
    for (int i = 2 * mesh.n_vertices(); i < 3 * mesh.n_vertices(); ++i) CHECK(mx[i] == 0.0);
}

TEST_CASE("NaN states are rejected") {
    const Mesh mesh = single_triangle();
    State s = State::zero(3);
    s.u[1] = std::nan("");
    CHECK_THROWS_AS(assemble_residual(mesh, {}, {}, no_constraints(mesh), s), std::domain_error);
}
