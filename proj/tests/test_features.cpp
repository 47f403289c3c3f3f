#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "ptcflow/features.hpp"
#include "ptcflow/ptc.hpp"
#include "ptcflow/rng.hpp"

using namespace ptcflow;

namespace {

GeometrySpec b1_spec(TransformKind t = TransformKind::Identity) {
    GeometrySpec g;
    g.kind = GeometryKind::BackStep;
    g.inflow_width = 0.05;
    g.inflow_length = 0.25;
    g.outflow_width = 0.12;
    g.outflow_length = 1.15;
    g.transform.kind = t;
    return g;
}

struct PatchInputs {
    Problem problem;
    DirichletBc dirichlet;
    State state;
    std::vector<double> weak;
    StrongResiduals strong;
};

PatchInputs prepare(double h, double u_in, TransformKind t = TransformKind::Identity) {
    PatchInputs in;
    in.problem.mesh = generate_mesh(b1_spec(t), h);
    in.problem.bc.inlet_peak_velocity = u_in;
    in.dirichlet = build_dirichlet(in.problem.mesh, in.problem.bc);
    in.state = State::zero(in.problem.mesh.n_vertices());
    apply_dirichlet(in.dirichlet, in.state);
    // a few pseudo-time steps land us on a generic flow state
    for (int n = 1; n <= 3; ++n) {
        std::vector<double> dt(in.problem.mesh.n_elements());
        for (int e = 0; e < in.problem.mesh.n_elements(); ++e)
            dt[e] = local_dt(cfl_iter(n), in.problem.mesh.h[e],
                             element_speed(in.problem.mesh, in.state, e));
        in.state = ptc_step(in.problem, in.dirichlet, in.state, dt).state;
    }
    in.weak = assemble_residual(in.problem.mesh, in.problem.props, in.problem.bc, in.dirichlet,
                                in.state);
    in.strong = strong_residuals(in.problem.mesh, in.problem.props, in.state);
    return in;
}

int neighbor_count(const Mesh& mesh, int e) {
    int c = 0;
    for (int nb : mesh.neighbors[e])
        if (nb >= 0) ++c;
    return c;
}

}  // namespace

TEST_CASE("feature vector has 124 entries with the documented block layout") {
    PatchInputs in = prepare(0.05, 0.001);
    const Mesh& mesh = in.problem.mesh;

    int interior = -1, boundary1 = -1;
    for (int e = 0; e < mesh.n_elements(); ++e) {
        if (neighbor_count(mesh, e) == 3 && interior < 0) interior = e;
        if (neighbor_count(mesh, e) == 1 && boundary1 < 0) boundary1 = e;
    }
    REQUIRE(interior >= 0);

    const FeatureVector f =
        extract_patch(mesh, in.state, in.weak, in.strong, in.problem.props, interior);
    CHECK(f.size() == 124);

    // block 0: edge lengths of the element itself
    const auto& el = mesh.elements[interior];
    for (int k = 0; k < 3; ++k) {
        const auto& a = mesh.vertices[el[k]];
        const auto& b = mesh.vertices[el[(k + 1) % 3]];
        CHECK(f[k] == doctest::Approx(std::hypot(b[0] - a[0], b[1] - a[1])).epsilon(1e-15));
    }
    // u, v, p at the vertices
    for (int k = 0; k < 3; ++k) {
        CHECK(f[3 + k] == in.state.u[el[k]]);
        CHECK(f[6 + k] == in.state.v[el[k]]);
        CHECK(f[9 + k] == in.state.p[el[k]]);
    }
    // weak residual entries at the vertex indices
    const int n = mesh.n_vertices();
    for (int k = 0; k < 3; ++k) {
        CHECK(f[12 + k] == in.weak[el[k]]);
        CHECK(f[15 + k] == in.weak[n + el[k]]);
        CHECK(f[18 + k] == in.weak[2 * n + el[k]]);
    }
    // strong residuals and the cell Reynolds number
    for (int k = 0; k < 3; ++k) {
        CHECK(f[21 + k] == in.strong.ru[interior][k]);
        CHECK(f[24 + k] == in.strong.rv[interior][k]);
        CHECK(f[27 + k] == in.strong.rp[interior]);
    }
    const double speed = element_speed(mesh, in.state, interior);
    CHECK(f[30] == doctest::Approx(in.problem.props.rho * std::max(speed, 1e-10) *
                                   mesh.h[interior] / in.problem.props.mu));

    // neighbor blocks are in ascending element id order
    const auto& nbs = mesh.neighbors[interior];
    for (int b = 0; b < 3; ++b) {
        const int nb = nbs[b];
        REQUIRE(nb >= 0);
        if (b > 0) CHECK(nb > nbs[b - 1]);
        const auto& nel = mesh.elements[nb];
        for (int k = 0; k < 3; ++k) CHECK(f[31 * (b + 1) + 3 + k] == in.state.u[nel[k]]);
    }
}

TEST_CASE("missing neighbor blocks are zero") {
    PatchInputs in = prepare(0.05, 0.001);
    const Mesh& mesh = in.problem.mesh;
    int corner = -1;
    for (int e = 0; e < mesh.n_elements() && corner < 0; ++e)
        if (neighbor_count(mesh, e) == 1) corner = e;
    REQUIRE(corner >= 0);
    const FeatureVector f =
        extract_patch(mesh, in.state, in.weak, in.strong, in.problem.props, corner);
    for (int i = 2 * kBlockSize; i < kFeatureCount; ++i) CHECK(f[i] == 0.0);
}

TEST_CASE("zero state leaves only geometry features") {
    PatchInputs in = prepare(0.05, 0.001);
    const Mesh& mesh = in.problem.mesh;
    const State zero = State::zero(mesh.n_vertices());
    const std::vector<double> weak(3 * mesh.n_vertices(), 0.0);
    const auto strong = strong_residuals(mesh, in.problem.props, zero);
    const FeatureVector f = extract_patch(mesh, zero, weak, strong, in.problem.props, 0);
    for (int b = 0; b < 4; ++b) {
        const int off = b * kBlockSize;
        if (f[off] == 0.0) continue;  // absent neighbor
        for (int k = 3; k < 30; ++k) CHECK(f[off + k] == 0.0);
        // cell Reynolds capped by the zero-velocity guard
        CHECK(f[off + 30] > 0.0);
        CHECK(f[off + 30] <= in.problem.props.rho * 1e-10 * 0.05 / in.problem.props.mu * 1.001);
    }
}

TEST_CASE("shared vertices duplicate their values across blocks") {
    PatchInputs in = prepare(0.05, 0.001);
    const Mesh& mesh = in.problem.mesh;
    int interior = -1;
    for (int e = 0; e < mesh.n_elements() && interior < 0; ++e)
        if (neighbor_count(mesh, e) == 3) interior = e;
    const FeatureVector f =
        extract_patch(mesh, in.state, in.weak, in.strong, in.problem.props, interior);

    const auto& el = mesh.elements[interior];
    const int nb = mesh.neighbors[interior][0];
    const auto& nel = mesh.elements[nb];
    for (int k = 0; k < 3; ++k)
        for (int j = 0; j < 3; ++j)
            if (el[k] == nel[j]) {
                CHECK(f[3 + k] == f[kBlockSize + 3 + j]);    // u
                CHECK(f[9 + k] == f[kBlockSize + 9 + j]);    // p
                CHECK(f[12 + k] == f[kBlockSize + 12 + j]);  // R_u
            }
}

TEST_CASE("invalid element id is rejected") {
    PatchInputs in = prepare(0.05, 0.001);
    CHECK_THROWS_AS(extract_patch(in.problem.mesh, in.state, in.weak, in.strong, in.problem.props,
                                  in.problem.mesh.n_elements()),
                    std::invalid_argument);
}

TEST_CASE("normalizer fits mean and sample deviation") {
    std::vector<FeatureVector> samples(3);
    for (int s = 0; s < 3; ++s) samples[s].fill(double(s + 1));  // 1, 2, 3 per component
    const Normalizer nm = fit_normalizer(samples);
    for (int i = 0; i < kFeatureCount; ++i) {
        CHECK(nm.mean[i] == doctest::Approx(2.0));
        CHECK(nm.stddev[i] == doctest::Approx(1.0));  // sample std of {1,2,3}
    }
    const auto z = normalize(nm, samples[0]);
    for (int i = 0; i < kFeatureCount; ++i) CHECK(z[i] == doctest::Approx(-1.0));

    CHECK_THROWS_AS(fit_normalizer({samples[0]}), std::invalid_argument);
}

TEST_CASE("constant components hit the sigma floor and normalize to zero") {
    std::vector<FeatureVector> samples(4);
    for (auto& s : samples) s.fill(7.5);
    const Normalizer nm = fit_normalizer(samples);
    for (int i = 0; i < kFeatureCount; ++i) CHECK(nm.stddev[i] == kSigmaFloor);
    const auto z = normalize(nm, samples[0]);
    for (int i = 0; i < kFeatureCount; ++i) CHECK(z[i] == 0.0);
}

TEST_CASE("normalized training set has zero mean and unit deviation") {
    Rng rng(31);
    std::vector<FeatureVector> samples(64);
    for (auto& s : samples)
        for (auto& x : s) x = 3.0 + 2.0 * rng.normal();
    const Normalizer nm = fit_normalizer(samples);
    for (int i = 0; i < kFeatureCount; ++i) {
        double mean = 0.0, var = 0.0;
        for (const auto& s : samples) mean += (s[i] - nm.mean[i]) / nm.stddev[i];
        mean /= samples.size();
        for (const auto& s : samples) {
            const double z = (s[i] - nm.mean[i]) / nm.stddev[i];
            var += (z - mean) * (z - mean);
        }
        var /= (samples.size() - 1.0);
        CHECK(std::abs(mean) < 1e-10);
        CHECK(std::abs(std::sqrt(var) - 1.0) < 1e-10);
    }
}

TEST_CASE("mirror transform maps features covariantly") {
    PatchInputs a = prepare(0.05, 0.001);
    PatchInputs b = prepare(0.05, 0.001, TransformKind::MirrorX);
    const Mesh& ma = a.problem.mesh;
    REQUIRE(ma.n_elements() == b.problem.mesh.n_elements());

    // absolute tolerances scaled by each field's magnitude; the two solves
    // agree only up to linear-solver rounding noise
    auto max_abs = [](const std::vector<double>& v) {
        double m = 0.0;
        for (double x : v) m = std::max(m, std::abs(x));
        return m;
    };
    const double state_tol = 1e-7 * std::max(max_abs(a.state.u), max_abs(a.state.v));
    const double p_tol = 1e-7 * std::max(max_abs(a.state.p), 1e-12);
    const double weak_tol = 1e-7 * max_abs(a.weak);
    double strong_tol = 0.0;
    for (int e = 0; e < ma.n_elements(); ++e)
        for (int k = 0; k < 3; ++k)
            strong_tol = std::max(strong_tol, std::abs(a.strong.ru[e][k]));
    strong_tol = 1e-7 * std::max(strong_tol, 1e-12);

    // the mirrored mesh swaps local vertices 1 and 2; edges (01,12,20) map to
    // lengths (20,12,01) of the original
    const int vperm[3] = {0, 2, 1};
    const int eperm[3] = {2, 1, 0};
    for (int e = 0; e < ma.n_elements(); e += 37) {
        const FeatureVector fa =
            extract_patch(ma, a.state, a.weak, a.strong, a.problem.props, e);
        const FeatureVector fb = extract_patch(b.problem.mesh, b.state, b.weak, b.strong,
                                               b.problem.props, e);
        for (int k = 0; k < 3; ++k) {
            CHECK(fb[k] == doctest::Approx(fa[eperm[k]]).epsilon(1e-12));  // edge lengths
            CHECK(std::abs(fb[3 + k] + fa[3 + vperm[k]]) < state_tol);     // u flips
            CHECK(std::abs(fb[6 + k] - fa[6 + vperm[k]]) < state_tol);     // v carries over
            CHECK(std::abs(fb[9 + k] - fa[9 + vperm[k]]) < p_tol);         // p carries over
            CHECK(std::abs(fb[12 + k] + fa[12 + vperm[k]]) < weak_tol);    // R_u flips
            CHECK(std::abs(fb[18 + k] - fa[18 + vperm[k]]) < weak_tol);    // R_p carries over
            CHECK(std::abs(fb[21 + k] + fa[21 + vperm[k]]) < strong_tol);  // r_u flips
            CHECK(std::abs(fb[27 + k] - fa[27 + vperm[k]]) < strong_tol);  // r_p carries over
        }
        CHECK(fb[30] == doctest::Approx(fa[30]).epsilon(1e-7));  // cell Reynolds
    }
}
