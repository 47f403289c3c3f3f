#include "ptcflow/features.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ptcflow {

namespace {

void fill_block(double* out, const Mesh& mesh, const State& state,
                const std::vector<double>& weak_residual, const StrongResiduals& strong,
                const FluidProps& props, int e, double eps_u) {
    const int n = mesh.n_vertices();
    const auto& el = mesh.elements[e];
    int k = 0;
    for (int i = 0; i < 3; ++i) {
        const auto& p = mesh.vertices[el[i]];
        const auto& q = mesh.vertices[el[(i + 1) % 3]];
        out[k++] = std::hypot(q[0] - p[0], q[1] - p[1]);
    }
    for (int i = 0; i < 3; ++i) out[k++] = state.u[el[i]];
    for (int i = 0; i < 3; ++i) out[k++] = state.v[el[i]];
    for (int i = 0; i < 3; ++i) out[k++] = state.p[el[i]];
    for (int i = 0; i < 3; ++i) out[k++] = weak_residual[el[i]];
    for (int i = 0; i < 3; ++i) out[k++] = weak_residual[n + el[i]];
    for (int i = 0; i < 3; ++i) out[k++] = weak_residual[2 * n + el[i]];
    for (int i = 0; i < 3; ++i) out[k++] = strong.ru[e][i];
    for (int i = 0; i < 3; ++i) out[k++] = strong.rv[e][i];
    for (int i = 0; i < 3; ++i) out[k++] = strong.rp[e];
    const double speed = std::max(element_speed(mesh, state, e), eps_u);
    out[k++] = props.rho * speed * mesh.h[e] / props.mu;
}

}  // namespace

FeatureVector extract_patch(const Mesh& mesh, const State& state,
                            const std::vector<double>& weak_residual,
                            const StrongResiduals& strong, const FluidProps& props, int e,
                            double eps_u) {
    if (e < 0 || e >= mesh.n_elements())
        throw std::invalid_argument("extract_patch: invalid element id");
    if (static_cast<int>(weak_residual.size()) != 3 * mesh.n_vertices())
        throw std::invalid_argument("extract_patch: residual length mismatch");

    FeatureVector f{};
    fill_block(f.data(), mesh, state, weak_residual, strong, props, e, eps_u);
    int block = 1;
    for (int nb : mesh.neighbors[e]) {  // already in ascending id order
        if (nb < 0) break;
        fill_block(f.data() + block * kBlockSize, mesh, state, weak_residual, strong, props, nb,
                   eps_u);
        ++block;
    }
    return f;
}

Normalizer fit_normalizer(const std::vector<FeatureVector>& samples) {
    if (samples.size() < 2)
        throw std::invalid_argument("fit_normalizer: need at least two samples");
    Normalizer nm;
    const double n = static_cast<double>(samples.size());
    for (const auto& s : samples)
        for (int i = 0; i < kFeatureCount; ++i) nm.mean[i] += s[i];
    for (int i = 0; i < kFeatureCount; ++i) nm.mean[i] /= n;
    for (const auto& s : samples)
        for (int i = 0; i < kFeatureCount; ++i) {
            const double d = s[i] - nm.mean[i];
            nm.stddev[i] += d * d;
        }
    for (int i = 0; i < kFeatureCount; ++i)
        nm.stddev[i] = std::max(std::sqrt(nm.stddev[i] / (n - 1.0)), kSigmaFloor);
    return nm;
}

FeatureVector normalize(const Normalizer& n, const FeatureVector& x) {
    FeatureVector z;
    for (int i = 0; i < kFeatureCount; ++i) z[i] = (x[i] - n.mean[i]) / n.stddev[i];
    return z;
}

}  // namespace ptcflow
