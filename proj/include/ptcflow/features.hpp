#pragma once

#include <array>
#include <vector>

#include "ptcflow/fem.hpp"
#include "ptcflow/mesh.hpp"

namespace ptcflow {

// Patch descriptor: 4 element blocks of 31 entries each. Per block: the 3
// edge lengths (edges v0-v1, v1-v2, v2-v0), then u, v, p, R_u, R_v, R_p,
// r_u, r_v, r_p at the 3 vertices, then the cell Reynolds number. Block 0 is
// the element itself, blocks 1..3 its edge neighbors in ascending element id;
// blocks of missing neighbors stay zero.
inline constexpr int kFeatureCount = 124;
inline constexpr int kBlockSize = 31;

using FeatureVector = std::array<double, kFeatureCount>;

struct Normalizer {
    std::array<double, kFeatureCount> mean{};
    std::array<double, kFeatureCount> stddev{};
};

inline constexpr double kSigmaFloor = 1e-12;

FeatureVector extract_patch(const Mesh& mesh, const State& state,
                            const std::vector<double>& weak_residual,
                            const StrongResiduals& strong, const FluidProps& props, int e,
                            double eps_u = 1e-10);

// Componentwise mean and sample standard deviation (floored at kSigmaFloor).
Normalizer fit_normalizer(const std::vector<FeatureVector>& samples);

FeatureVector normalize(const Normalizer& n, const FeatureVector& x);

}  // namespace ptcflow
