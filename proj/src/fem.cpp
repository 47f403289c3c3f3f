#include "ptcflow/fem.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace ptcflow {

std::vector<double> State::flat() const {
    const int n = n_vertices();
    std::vector<double> x(3 * n);
    std::copy(u.begin(), u.end(), x.begin());
    std::copy(v.begin(), v.end(), x.begin() + n);
    std::copy(p.begin(), p.end(), x.begin() + 2 * n);
    return x;
}

State State::from_flat(const std::vector<double>& x) {
    if (x.size() % 3 != 0) throw std::invalid_argument("State::from_flat: length not divisible by 3");
    const int n = static_cast<int>(x.size() / 3);
    State s;
    s.u.assign(x.begin(), x.begin() + n);
    s.v.assign(x.begin() + n, x.begin() + 2 * n);
    s.p.assign(x.begin() + 2 * n, x.end());
    return s;
}

double element_speed(const Mesh& mesh, const State& state, int e) {
    const auto& el = mesh.elements[e];
    const double uc = (state.u[el[0]] + state.u[el[1]] + state.u[el[2]]) / 3.0;
    const double vc = (state.v[el[0]] + state.v[el[1]] + state.v[el[2]]) / 3.0;
    return std::hypot(uc, vc);
}

StabCoeffs compute_stab_coeffs(const Mesh& mesh, const FluidProps& props, const State& state) {
    const int ne = mesh.n_elements();
    StabCoeffs sc;
    sc.tau.resize(ne);
    sc.delta.resize(ne);
    const double nu = props.nu();
    for (int e = 0; e < ne; ++e) {
        const double s = element_speed(mesh, state, e);
        const double he = mesh.h[e];
        const double a1 = 2.0 * s / he;
        const double a2 = 4.0 * nu / (he * he);
        sc.tau[e] = 1.0 / std::sqrt(a1 * a1 + a2 * a2);
        sc.delta[e] = 0.5 * s * he;
    }
    return sc;
}

namespace {

struct ElementGeom {
    int vid[3];
    double b[3], c[3];  // P1 basis gradients
    double area;
};

ElementGeom element_geometry(const Mesh& mesh, int e) {
    ElementGeom g;
    const auto& el = mesh.elements[e];
    for (int k = 0; k < 3; ++k) g.vid[k] = el[k];
    const auto& p0 = mesh.vertices[el[0]];
    const auto& p1 = mesh.vertices[el[1]];
    const auto& p2 = mesh.vertices[el[2]];
    const double twoA = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
    g.area = 0.5 * twoA;
    g.b[0] = (p1[1] - p2[1]) / twoA;
    g.b[1] = (p2[1] - p0[1]) / twoA;
    g.b[2] = (p0[1] - p1[1]) / twoA;
    g.c[0] = (p2[0] - p1[0]) / twoA;
    g.c[1] = (p0[0] - p2[0]) / twoA;
    g.c[2] = (p1[0] - p0[0]) / twoA;
    return g;
}

// edge-midpoint rule, exact for quadratics
constexpr double kPhiQ[3][3] = {{0.5, 0.5, 0.0}, {0.0, 0.5, 0.5}, {0.5, 0.0, 0.5}};

void check_finite(const State& state) {
    for (const auto* vec : {&state.u, &state.v, &state.p})
        for (double x : *vec)
            if (!std::isfinite(x)) throw std::domain_error("assembly: state contains a non-finite value");
}

std::map<std::pair<int, int>, std::vector<int>> edge_adjacency(const Mesh& mesh) {
    std::map<std::pair<int, int>, std::vector<int>> adj;
    for (int e = 0; e < mesh.n_elements(); ++e) {
        const auto& el = mesh.elements[e];
        for (int k = 0; k < 3; ++k) {
            int a = el[k], b = el[(k + 1) % 3];
            adj[{std::min(a, b), std::max(a, b)}].push_back(e);
        }
    }
    return adj;
}

}  // namespace

DirichletBc build_dirichlet(const Mesh& mesh, const BoundaryConditions& bc) {
    const int n = mesh.n_vertices();
    DirichletBc d;
    d.fixed.assign(3 * n, 0);
    d.value.assign(3 * n, 0.0);

    auto fix_velocity = [&](int v, double uval, double vval) {
        d.fixed[v] = 1;
        d.value[v] = uval;
        d.fixed[n + v] = 1;
        d.value[n + v] = vval;
    };

    bool has_outlet = false;
    std::vector<const BoundaryEdge*> inlet_edges;
    std::vector<int> moving_vertices;
    for (const auto& be : mesh.boundary_edges) {
        if (be.tag == BoundaryTag::Outlet) has_outlet = true;
        if (be.tag == BoundaryTag::Inlet) inlet_edges.push_back(&be);
        if (be.tag == BoundaryTag::MovingWall) {
            moving_vertices.push_back(be.a);
            moving_vertices.push_back(be.b);
        }
    }

    if (!inlet_edges.empty()) {
        // inlet span and inward normal from the owning elements
        const auto adj = edge_adjacency(mesh);
        const auto& e0 = *inlet_edges.front();
        double tx = mesh.vertices[e0.b][0] - mesh.vertices[e0.a][0];
        double ty = mesh.vertices[e0.b][1] - mesh.vertices[e0.a][1];
        const double tlen = std::hypot(tx, ty);
        tx /= tlen;
        ty /= tlen;

        double nx = 0.0, ny = 0.0;
        std::vector<int> inlet_vertices;
        for (const auto* be : inlet_edges) {
            inlet_vertices.push_back(be->a);
            inlet_vertices.push_back(be->b);
            const auto& owners = adj.at({std::min(be->a, be->b), std::max(be->a, be->b)});
            const auto& el = mesh.elements[owners.front()];
            int w = el[0];
            for (int k = 0; k < 3; ++k)
                if (el[k] != be->a && el[k] != be->b) w = el[k];
            const double mx = 0.5 * (mesh.vertices[be->a][0] + mesh.vertices[be->b][0]);
            const double my = 0.5 * (mesh.vertices[be->a][1] + mesh.vertices[be->b][1]);
            double ex = mesh.vertices[be->b][0] - mesh.vertices[be->a][0];
            double ey = mesh.vertices[be->b][1] - mesh.vertices[be->a][1];
            double cx = ey, cy = -ex;  // one of the two edge normals
            if (cx * (mesh.vertices[w][0] - mx) + cy * (mesh.vertices[w][1] - my) < 0.0) {
                cx = -cx;
                cy = -cy;
            }
            const double clen = std::hypot(cx, cy);
            nx += cx / clen;
            ny += cy / clen;
        }
        const double nlen = std::hypot(nx, ny);
        nx /= nlen;
        ny /= nlen;

        std::sort(inlet_vertices.begin(), inlet_vertices.end());
        inlet_vertices.erase(std::unique(inlet_vertices.begin(), inlet_vertices.end()),
                             inlet_vertices.end());
        double smin = 1e300, smax = -1e300;
        for (int v : inlet_vertices) {
            const double s = mesh.vertices[v][0] * tx + mesh.vertices[v][1] * ty;
            smin = std::min(smin, s);
            smax = std::max(smax, s);
        }
        const double span = smax - smin;
        for (int v : inlet_vertices) {
            const double s = (mesh.vertices[v][0] * tx + mesh.vertices[v][1] * ty - smin) / span;
            const double mag = bc.inlet_peak_velocity * 4.0 * s * (1.0 - s);
            fix_velocity(v, mag * nx, mag * ny);
        }
    }

    if (!moving_vertices.empty()) {
        std::sort(moving_vertices.begin(), moving_vertices.end());
        moving_vertices.erase(std::unique(moving_vertices.begin(), moving_vertices.end()),
                              moving_vertices.end());
        double ccx = 0.0, ccy = 0.0;
        for (int v : moving_vertices) {
            ccx += mesh.vertices[v][0];
            ccy += mesh.vertices[v][1];
        }
        ccx /= moving_vertices.size();
        ccy /= moving_vertices.size();
        for (int v : moving_vertices) {
            const double rx = mesh.vertices[v][0] - ccx;
            const double ry = mesh.vertices[v][1] - ccy;
            const double rlen = std::hypot(rx, ry);
            fix_velocity(v, -bc.moving_wall_speed * ry / rlen, bc.moving_wall_speed * rx / rlen);
        }
    }

    // walls override inlet values at shared corners (profile is zero there)
    for (const auto& be : mesh.boundary_edges) {
        if (be.tag == BoundaryTag::Wall || be.tag == BoundaryTag::ObstacleWall) {
            fix_velocity(be.a, 0.0, 0.0);
            fix_velocity(be.b, 0.0, 0.0);
        }
    }

    if (!has_outlet && n > 0) {
        d.fixed[2 * n] = 1;  // pin the pressure level of an enclosed domain
        d.value[2 * n] = 0.0;
    }
    return d;
}

void apply_dirichlet(const DirichletBc& bc, State& state) {
    const int n = state.n_vertices();
    for (int i = 0; i < n; ++i) {
        if (bc.fixed[i]) state.u[i] = bc.value[i];
        if (bc.fixed[n + i]) state.v[i] = bc.value[n + i];
        if (bc.fixed[2 * n + i]) state.p[i] = bc.value[2 * n + i];
    }
}

std::vector<double> assemble_residual(const Mesh& mesh, const FluidProps& props,
                                      const BoundaryConditions& bc, const DirichletBc& dirichlet,
                                      const State& state, const AssemblyOpts& opts) {
    check_finite(state);
    const int n = mesh.n_vertices();
    if (state.n_vertices() != n) throw std::invalid_argument("assemble_residual: state/mesh mismatch");

    const double rho = props.rho, mu = props.mu;
    const double fx = props.body_force[0], fy = props.body_force[1];
    const double conv = opts.convection ? 1.0 : 0.0;

    StabCoeffs local_stab;
    const StabCoeffs* stab = opts.frozen_stab;
    if (opts.stabilization && !stab) {
        local_stab = compute_stab_coeffs(mesh, props, state);
        stab = &local_stab;
    }

    std::vector<double> F(3 * n, 0.0);
    for (int e = 0; e < mesh.n_elements(); ++e) {
        const ElementGeom g = element_geometry(mesh, e);
        const double A = g.area;
        const double w = A / 3.0;
        double un[3], vn[3], pn[3];
        for (int k = 0; k < 3; ++k) {
            un[k] = state.u[g.vid[k]];
            vn[k] = state.v[g.vid[k]];
            pn[k] = state.p[g.vid[k]];
        }
        double ux = 0, uy = 0, vx = 0, vy = 0, px = 0, py = 0;
        for (int k = 0; k < 3; ++k) {
            ux += g.b[k] * un[k];
            uy += g.c[k] * un[k];
            vx += g.b[k] * vn[k];
            vy += g.c[k] * vn[k];
            px += g.b[k] * pn[k];
            py += g.c[k] * pn[k];
        }
        const double div_u = ux + vy;
        const double pbar = (pn[0] + pn[1] + pn[2]) / 3.0;
        const double tau = opts.stabilization ? stab->tau[e] : 0.0;
        const double delta = opts.stabilization ? stab->delta[e] : 0.0;

        for (int a = 0; a < 3; ++a) {
            const int iu = g.vid[a], iv = n + g.vid[a], ip = 2 * n + g.vid[a];
            // constant-in-x terms
            F[iu] += mu * A * (ux * g.b[a] + uy * g.c[a]) - g.b[a] * A * pbar - fx * w +
                     rho * delta * A * g.b[a] * div_u;
            F[iv] += mu * A * (vx * g.b[a] + vy * g.c[a]) - g.c[a] * A * pbar - fy * w +
                     rho * delta * A * g.c[a] * div_u;
            F[ip] += rho * div_u * w;
        }
        for (int q = 0; q < 3; ++q) {
            double uq = 0, vq = 0;
            for (int k = 0; k < 3; ++k) {
                uq += kPhiQ[q][k] * un[k];
                vq += kPhiQ[q][k] * vn[k];
            }
            const double rmx = conv * rho * (uq * ux + vq * uy) + px - fx;
            const double rmy = conv * rho * (uq * vx + vq * vy) + py - fy;
            for (int a = 0; a < 3; ++a) {
                const double phi = kPhiQ[q][a];
                const double adv = conv * (uq * g.b[a] + vq * g.c[a]);
                F[g.vid[a]] += w * (conv * rho * (uq * ux + vq * uy) * phi + tau * adv * rmx);
                F[n + g.vid[a]] += w * (conv * rho * (uq * vx + vq * vy) * phi + tau * adv * rmy);
                F[2 * n + g.vid[a]] += w * tau * (g.b[a] * rmx + g.c[a] * rmy);
            }
        }
    }

    if (bc.outlet_pressure != 0.0) {
        for (const auto& be : mesh.boundary_edges) {
            if (be.tag != BoundaryTag::Outlet) continue;
            const double ex = mesh.vertices[be.b][0] - mesh.vertices[be.a][0];
            const double ey = mesh.vertices[be.b][1] - mesh.vertices[be.a][1];
            // boundary edges are stored with the domain on the left
            const double onx = ey, ony = -ex;  // outward normal scaled by edge length
            for (int vtx : {be.a, be.b}) {
                F[vtx] += bc.outlet_pressure * onx * 0.5;
                F[n + vtx] += bc.outlet_pressure * ony * 0.5;
            }
        }
    }

    if (opts.apply_dirichlet) {
        const auto flat = state.flat();
        for (int i = 0; i < 3 * n; ++i)
            if (dirichlet.fixed[i]) F[i] = flat[i] - dirichlet.value[i];
    }
    return F;
}

SparseMatrix assemble_jacobian(const Mesh& mesh, const FluidProps& props,
                               const BoundaryConditions& bc, const DirichletBc& dirichlet,
                               const State& state, const AssemblyOpts& opts) {
    (void)bc;  // traction term is state-independent
    check_finite(state);
    const int n = mesh.n_vertices();
    if (state.n_vertices() != n) throw std::invalid_argument("assemble_jacobian: state/mesh mismatch");

    const double rho = props.rho, mu = props.mu;
    const double fx = props.body_force[0], fy = props.body_force[1];
    const double conv = opts.convection ? 1.0 : 0.0;

    StabCoeffs local_stab;
    const StabCoeffs* stab = opts.frozen_stab;
    if (opts.stabilization && !stab) {
        local_stab = compute_stab_coeffs(mesh, props, state);
        stab = &local_stab;
    }

    std::vector<int> ti, tj;
    std::vector<double> tv;
    const std::size_t reserve = 81ull * mesh.n_elements() + 3ull * n;
    ti.reserve(reserve);
    tj.reserve(reserve);
    tv.reserve(reserve);
    for (int i = 0; i < 3 * n; ++i) {  // keep every diagonal in the pattern
        ti.push_back(i);
        tj.push_back(i);
        tv.push_back(0.0);
    }

    double K[9][9];
    for (int e = 0; e < mesh.n_elements(); ++e) {
        const ElementGeom g = element_geometry(mesh, e);
        const double A = g.area;
        const double w = A / 3.0;
        double un[3], vn[3], pn[3];
        for (int k = 0; k < 3; ++k) {
            un[k] = state.u[g.vid[k]];
            vn[k] = state.v[g.vid[k]];
            pn[k] = state.p[g.vid[k]];
        }
        double ux = 0, uy = 0, vx = 0, vy = 0, px = 0, py = 0;
        for (int k = 0; k < 3; ++k) {
            ux += g.b[k] * un[k];
            uy += g.c[k] * un[k];
            vx += g.b[k] * vn[k];
            vy += g.c[k] * vn[k];
            px += g.b[k] * pn[k];
            py += g.c[k] * pn[k];
        }
        const double tau = opts.stabilization ? stab->tau[e] : 0.0;
        const double delta = opts.stabilization ? stab->delta[e] : 0.0;

        for (auto& row : K)
            for (double& x : row) x = 0.0;

        for (int a = 0; a < 3; ++a)
            for (int bb = 0; bb < 3; ++bb) {
                const double lap = mu * A * (g.b[bb] * g.b[a] + g.c[bb] * g.c[a]);
                K[a][bb] += lap + rho * delta * A * g.b[a] * g.b[bb];
                K[a][3 + bb] += rho * delta * A * g.b[a] * g.c[bb];
                K[a][6 + bb] += -g.b[a] * A / 3.0;
                K[3 + a][bb] += rho * delta * A * g.c[a] * g.b[bb];
                K[3 + a][3 + bb] += lap + rho * delta * A * g.c[a] * g.c[bb];
                K[3 + a][6 + bb] += -g.c[a] * A / 3.0;
                K[6 + a][bb] += rho * g.b[bb] * A / 3.0;
                K[6 + a][3 + bb] += rho * g.c[bb] * A / 3.0;
                K[6 + a][6 + bb] += tau * A * (g.b[a] * g.b[bb] + g.c[a] * g.c[bb]);
            }

        for (int q = 0; q < 3; ++q) {
            double uq = 0, vq = 0;
            for (int k = 0; k < 3; ++k) {
                uq += kPhiQ[q][k] * un[k];
                vq += kPhiQ[q][k] * vn[k];
            }
            const double rmx = conv * rho * (uq * ux + vq * uy) + px - fx;
            const double rmy = conv * rho * (uq * vx + vq * vy) + py - fy;
            for (int a = 0; a < 3; ++a) {
                const double phia = kPhiQ[q][a];
                const double adv_a = conv * (uq * g.b[a] + vq * g.c[a]);
                for (int bb = 0; bb < 3; ++bb) {
                    const double phib = kPhiQ[q][bb];
                    // derivatives of the convective strong residual
                    const double drmx_du = conv * rho * (phib * ux + uq * g.b[bb] + vq * g.c[bb]);
                    const double drmx_dv = conv * rho * phib * uy;
                    const double drmy_du = conv * rho * phib * vx;
                    const double drmy_dv = conv * rho * (phib * vy + uq * g.b[bb] + vq * g.c[bb]);

                    K[a][bb] += w * (drmx_du * phia + tau * (conv * phib * g.b[a] * rmx + adv_a * drmx_du));
                    K[a][3 + bb] += w * (drmx_dv * phia + tau * (conv * phib * g.c[a] * rmx + adv_a * drmx_dv));
                    K[a][6 + bb] += w * tau * adv_a * g.b[bb];
                    K[3 + a][bb] += w * (drmy_du * phia + tau * (conv * phib * g.b[a] * rmy + adv_a * drmy_du));
                    K[3 + a][3 + bb] += w * (drmy_dv * phia + tau * (conv * phib * g.c[a] * rmy + adv_a * drmy_dv));
                    K[3 + a][6 + bb] += w * tau * adv_a * g.c[bb];
                    K[6 + a][bb] += w * tau * (g.b[a] * drmx_du + g.c[a] * drmy_du);
                    K[6 + a][3 + bb] += w * tau * (g.b[a] * drmx_dv + g.c[a] * drmy_dv);
                }
            }
        }

        const int dof[9] = {g.vid[0],         g.vid[1],         g.vid[2],
                            n + g.vid[0],     n + g.vid[1],     n + g.vid[2],
                            2 * n + g.vid[0], 2 * n + g.vid[1], 2 * n + g.vid[2]};
        for (int a = 0; a < 9; ++a)
            for (int bb = 0; bb < 9; ++bb) {
                if (K[a][bb] == 0.0) continue;
                ti.push_back(dof[a]);
                tj.push_back(dof[bb]);
                tv.push_back(K[a][bb]);
            }
    }

    SparseMatrix J = SparseMatrix::from_triplets(3 * n, 3 * n, ti, tj, tv);
    if (opts.apply_dirichlet)
        for (int i = 0; i < 3 * n; ++i)
            if (dirichlet.fixed[i]) J.set_identity_row(i);
    return J;
}

std::vector<double> ptc_mass_diagonal(const Mesh& mesh, const FluidProps& props,
                                      const std::vector<double>& dt_e) {
    const int n = mesh.n_vertices();
    if (static_cast<int>(dt_e.size()) != mesh.n_elements())
        throw std::invalid_argument("ptc_mass_diagonal: dt vector length mismatch");
    std::vector<double> diag(3 * n, 0.0);
    for (int e = 0; e < mesh.n_elements(); ++e) {
        if (!(dt_e[e] > 0.0)) throw std::domain_error("ptc_mass_diagonal: dt must be positive");
        const double m = props.rho * mesh.element_area(e) / 3.0 / dt_e[e];
        for (int k = 0; k < 3; ++k) {
            diag[mesh.elements[e][k]] += m;
            diag[n + mesh.elements[e][k]] += m;
        }
    }
    return diag;
}

SparseMatrix assemble_ptc_matrix(const Mesh& mesh, const FluidProps& props,
                                 const BoundaryConditions& bc, const DirichletBc& dirichlet,
                                 const State& state, const std::vector<double>& dt_e,
                                 const AssemblyOpts& opts) {
    SparseMatrix A = assemble_jacobian(mesh, props, bc, dirichlet, state, opts);
    const auto diag = ptc_mass_diagonal(mesh, props, dt_e);
    const int n3 = 3 * mesh.n_vertices();
    for (int i = 0; i < n3; ++i) {
        if (opts.apply_dirichlet && dirichlet.fixed[i]) continue;
        if (diag[i] != 0.0) A.add_to_diagonal(i, diag[i]);
    }
    return A;
}

StrongResiduals strong_residuals(const Mesh& mesh, const FluidProps& props, const State& state) {
    const int ne = mesh.n_elements();
    StrongResiduals r;
    r.ru.resize(ne);
    r.rv.resize(ne);
    r.rp.resize(ne);
    const double rho = props.rho;
    const double fx = props.body_force[0], fy = props.body_force[1];
    for (int e = 0; e < ne; ++e) {
        const ElementGeom g = element_geometry(mesh, e);
        double ux = 0, uy = 0, vx = 0, vy = 0, px = 0, py = 0;
        for (int k = 0; k < 3; ++k) {
            ux += g.b[k] * state.u[g.vid[k]];
            uy += g.c[k] * state.u[g.vid[k]];
            vx += g.b[k] * state.v[g.vid[k]];
            vy += g.c[k] * state.v[g.vid[k]];
            px += g.b[k] * state.p[g.vid[k]];
            py += g.c[k] * state.p[g.vid[k]];
        }
        for (int k = 0; k < 3; ++k) {
            const double uk = state.u[g.vid[k]], vk = state.v[g.vid[k]];
            r.ru[e][k] = rho * (uk * ux + vk * uy) + px + fx;
            r.rv[e][k] = rho * (uk * vx + vk * vy) + py + fy;
        }
        r.rp[e] = rho * (ux + vy);
    }
    return r;
}

namespace {

double component_l2_squared(const Mesh& mesh, const double* w) {
    double s = 0.0;
    for (int e = 0; e < mesh.n_elements(); ++e) {
        const auto& el = mesh.elements[e];
        const double A = mesh.element_area(e);
        const double w0 = w[el[0]], w1 = w[el[1]], w2 = w[el[2]];
        s += A / 6.0 * (w0 * w0 + w1 * w1 + w2 * w2 + w0 * w1 + w1 * w2 + w0 * w2);
    }
    return s;
}

}  // namespace

double reconstructed_residual_norm(const Mesh& mesh, const std::vector<double>& coeffs) {
    const int n = mesh.n_vertices();
    if (static_cast<int>(coeffs.size()) != 3 * n)
        throw std::invalid_argument("reconstructed_residual_norm: length mismatch");
    double s = 0.0;
    for (int c = 0; c < 3; ++c) s += component_l2_squared(mesh, coeffs.data() + c * n);
    return std::sqrt(s);
}

double velocity_l2_norm(const Mesh& mesh, const std::vector<double>& coeffs) {
    const int n = mesh.n_vertices();
    if (static_cast<int>(coeffs.size()) != 3 * n)
        throw std::invalid_argument("velocity_l2_norm: length mismatch");
    return std::sqrt(component_l2_squared(mesh, coeffs.data()) +
                     component_l2_squared(mesh, coeffs.data() + n));
}

std::vector<double> velocity_mass_apply(const Mesh& mesh, const std::vector<double>& coeffs) {
    const int n = mesh.n_vertices();
    if (static_cast<int>(coeffs.size()) != 3 * n)
        throw std::invalid_argument("velocity_mass_apply: length mismatch");
    std::vector<double> out(3 * n, 0.0);
    for (int e = 0; e < mesh.n_elements(); ++e) {
        const auto& el = mesh.elements[e];
        const double A12 = mesh.element_area(e) / 12.0;
        for (int comp = 0; comp < 2; ++comp) {
            const double* w = coeffs.data() + comp * n;
            double* o = out.data() + comp * n;
            const double sum = w[el[0]] + w[el[1]] + w[el[2]];
            for (int k = 0; k < 3; ++k) o[el[k]] += A12 * (sum + w[el[k]]);
        }
    }
    return out;
}

}  // namespace ptcflow
