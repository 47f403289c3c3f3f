#include "ptcflow/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace ptcflow {

namespace {

constexpr double kPi = 3.14159265358979323846;

double dist(const std::array<double, 2>& a, const std::array<double, 2>& b) {
    const double dx = b[0] - a[0], dy = b[1] - a[1];
    return std::sqrt(dx * dx + dy * dy);
}

}  // namespace

const char* to_string(BoundaryTag tag) {
    switch (tag) {
        case BoundaryTag::Inlet: return "Inlet";
        case BoundaryTag::Outlet: return "Outlet";
        case BoundaryTag::Wall: return "Wall";
        case BoundaryTag::MovingWall: return "MovingWall";
        case BoundaryTag::ObstacleWall: return "ObstacleWall";
    }
    return "Wall";
}

BoundaryTag boundary_tag_from_string(const std::string& s) {
    if (s == "Inlet") return BoundaryTag::Inlet;
    if (s == "Outlet") return BoundaryTag::Outlet;
    if (s == "Wall") return BoundaryTag::Wall;
    if (s == "MovingWall") return BoundaryTag::MovingWall;
    if (s == "ObstacleWall") return BoundaryTag::ObstacleWall;
    throw std::invalid_argument("unknown boundary tag: " + s);
}

bool Obstacle::contains(double x, double y, double dilation) const {
    switch (kind) {
        case ObstacleKind::None: return false;
        case ObstacleKind::Circle: {
            const double dx = x - cx, dy = y - cy;
            const double r = radius + dilation;
            return dx * dx + dy * dy < r * r;
        }
        case ObstacleKind::Ellipse: {
            const double dx = (x - cx) / (a + dilation), dy = (y - cy) / (b + dilation);
            return dx * dx + dy * dy < 1.0;
        }
    }
    return false;
}

void GeometrySpec::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0)) throw std::invalid_argument(std::string("geometry: ") + name + " must be positive");
    };
    if (kind == GeometryKind::BackStep) {
        positive(inflow_width, "inflow_width");
        positive(inflow_length, "inflow_length");
        positive(outflow_width, "outflow_width");
        positive(outflow_length, "outflow_length");
        if (inflow_width > outflow_width)
            throw std::invalid_argument("geometry: inflow_width must not exceed outflow_width");
    } else {
        positive(inner_radius, "inner_radius");
        positive(outer_radius, "outer_radius");
        if (inner_radius >= outer_radius)
            throw std::invalid_argument("geometry: inner_radius must be smaller than outer_radius");
    }
    if (transform.kind == TransformKind::Scale) positive(transform.scale_factor, "scale_factor");

    if (obstacle.kind != ObstacleKind::None) {
        double ext = obstacle.kind == ObstacleKind::Circle ? obstacle.radius
                                                           : std::max(obstacle.a, obstacle.b);
        positive(ext, "obstacle extent");
        if (kind == GeometryKind::BackStep) {
            const double total_len = inflow_length + outflow_length;
            const double x0 = obstacle.cx - ext, x1 = obstacle.cx + ext;
            const double y0 = obstacle.cy - ext, y1 = obstacle.cy + ext;
            const bool in_outflow = x0 > inflow_length && x1 < total_len && y0 > 0.0 && y1 < outflow_width;
            const bool in_inflow = x0 > 0.0 && x1 < inflow_length &&
                                   y0 > outflow_width - inflow_width && y1 < outflow_width;
            if (!in_outflow && !in_inflow)
                throw std::invalid_argument("geometry: obstacle not strictly inside the channel");
        } else {
            const double ccx = outer_radius, ccy = outer_radius;
            const double d = std::hypot(obstacle.cx - ccx, obstacle.cy - ccy);
            if (!(d - ext > inner_radius && d + ext < outer_radius))
                throw std::invalid_argument("geometry: obstacle not strictly inside the annular gap");
        }
    }
}

double Mesh::element_area(int e) const {
    const auto& el = elements[e];
    const auto& p0 = vertices[el[0]];
    const auto& p1 = vertices[el[1]];
    const auto& p2 = vertices[el[2]];
    return 0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]));
}

std::array<double, 2> Mesh::element_centroid(int e) const {
    const auto& el = elements[e];
    return {(vertices[el[0]][0] + vertices[el[1]][0] + vertices[el[2]][0]) / 3.0,
            (vertices[el[0]][1] + vertices[el[1]][1] + vertices[el[2]][1]) / 3.0};
}

namespace {

// (min vertex, max vertex, element id) for every element edge, sorted
std::vector<std::tuple<int, int, int>> edge_table(const Mesh& mesh) {
    std::vector<std::tuple<int, int, int>> edges;
    edges.reserve(3 * mesh.elements.size());
    for (int e = 0; e < mesh.n_elements(); ++e) {
        const auto& el = mesh.elements[e];
        for (int k = 0; k < 3; ++k) {
            int a = el[k], b = el[(k + 1) % 3];
            if (a > b) std::swap(a, b);
            edges.emplace_back(a, b, e);
        }
    }
    std::sort(edges.begin(), edges.end());
    return edges;
}

}  // namespace

void Mesh::finalize() {
    const int nv = n_vertices();
    const int ne = n_elements();
    h.assign(ne, 0.0);
    neighbors.assign(ne, {-1, -1, -1});

    for (int e = 0; e < ne; ++e) {
        const auto& el = elements[e];
        for (int k = 0; k < 3; ++k) {
            if (el[k] < 0 || el[k] >= nv) throw std::runtime_error("mesh: vertex index out of range");
            h[e] = std::max(h[e], dist(vertices[el[k]], vertices[el[(k + 1) % 3]]));
        }
        if (!(element_area(e) > 0.0))
            throw std::runtime_error("mesh: element " + std::to_string(e) + " has non-positive area");
    }

    auto edges = edge_table(*this);
    std::vector<std::pair<int, int>> boundary_found;
    std::size_t i = 0;
    while (i < edges.size()) {
        std::size_t j = i + 1;
        while (j < edges.size() && std::get<0>(edges[j]) == std::get<0>(edges[i]) &&
               std::get<1>(edges[j]) == std::get<1>(edges[i]))
            ++j;
        const std::size_t count = j - i;
        if (count == 1) {
            boundary_found.emplace_back(std::get<0>(edges[i]), std::get<1>(edges[i]));
        } else if (count == 2) {
            const int e1 = std::get<2>(edges[i]), e2 = std::get<2>(edges[i + 1]);
            for (int k = 0; k < 3; ++k) {
                if (neighbors[e1][k] < 0) { neighbors[e1][k] = e2; break; }
            }
            for (int k = 0; k < 3; ++k) {
                if (neighbors[e2][k] < 0) { neighbors[e2][k] = e1; break; }
            }
        } else {
            throw std::runtime_error("mesh: edge shared by more than two elements");
        }
        i = j;
    }
    for (auto& nb : neighbors) {
        std::sort(nb.begin(), nb.end(), [](int x, int y) {
            if ((x < 0) != (y < 0)) return y < 0;  // valid ids first
            return x < y;
        });
    }

    std::vector<std::pair<int, int>> boundary_tagged;
    boundary_tagged.reserve(boundary_edges.size());
    for (const auto& be : boundary_edges)
        boundary_tagged.emplace_back(std::min(be.a, be.b), std::max(be.a, be.b));
    std::sort(boundary_tagged.begin(), boundary_tagged.end());
    std::sort(boundary_found.begin(), boundary_found.end());
    if (boundary_tagged != boundary_found)
        throw std::runtime_error("mesh: tagged boundary does not match the topological boundary");
}

int euler_characteristic(const Mesh& mesh) {
    auto edges = edge_table(mesh);
    int distinct = 0;
    std::size_t i = 0;
    while (i < edges.size()) {
        std::size_t j = i + 1;
        while (j < edges.size() && std::get<0>(edges[j]) == std::get<0>(edges[i]) &&
               std::get<1>(edges[j]) == std::get<1>(edges[i]))
            ++j;
        ++distinct;
        i = j;
    }
    return mesh.n_vertices() - distinct + mesh.n_elements();
}

namespace {

// Structured grid over the union of axis-aligned blocks of the back-step.
Mesh generate_backstep(const GeometrySpec& spec, double h_max) {
    const double l_in = spec.inflow_length, l_out = spec.outflow_length;
    const double w_in = spec.inflow_width, w_out = spec.outflow_width;
    const double total_len = l_in + l_out;
    const double y_step = w_out - w_in;

    if (h_max > std::min(w_in, w_out))
        throw std::invalid_argument("generate_mesh: h_max leaves the channel unresolved");

    const double d = 0.999 * h_max / std::sqrt(2.0);
    const int m1 = std::max(1, (int)std::ceil(l_in / d));
    const int m2 = std::max(1, (int)std::ceil(l_out / d));
    const int n1 = y_step > 0.0 ? std::max(1, (int)std::ceil(y_step / d)) : 0;
    const int n2 = std::max(1, (int)std::ceil(w_in / d));

    std::vector<double> xs(m1 + m2 + 1), ys(n1 + n2 + 1);
    for (int i = 0; i <= m1; ++i) xs[i] = l_in * i / m1;
    for (int i = 1; i <= m2; ++i) xs[m1 + i] = l_in + l_out * i / m2;
    xs[m1 + m2] = total_len;
    for (int j = 0; j <= n1; ++j) ys[j] = n1 > 0 ? y_step * j / n1 : 0.0;
    for (int j = 1; j <= n2; ++j) ys[n1 + j] = y_step + w_in * j / n2;
    ys[n1 + n2] = w_out;

    const int nx = m1 + m2 + 1, ny = n1 + n2 + 1;
    auto included = [&](int i, int j) { return i >= m1 || j >= n1; };

    Mesh mesh;
    std::vector<int> id(nx * ny, -1);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            if (included(i, j)) {
                id[j * nx + i] = mesh.n_vertices();
                mesh.vertices.push_back({xs[i], ys[j]});
            }
    for (int j = 0; j + 1 < ny; ++j)
        for (int i = 0; i + 1 < nx; ++i) {
            if (!(included(i, j) && included(i + 1, j) && included(i, j + 1) && included(i + 1, j + 1)))
                continue;
            const int v00 = id[j * nx + i], v10 = id[j * nx + i + 1];
            const int v01 = id[(j + 1) * nx + i], v11 = id[(j + 1) * nx + i + 1];
            mesh.elements.push_back({v00, v10, v11});
            mesh.elements.push_back({v00, v11, v01});
        }
    return mesh;
}

Mesh generate_annulus(const GeometrySpec& spec, double h_max) {
    const double r_in = spec.inner_radius, r_out = spec.outer_radius;
    const double gap = r_out - r_in;
    if (h_max > gap) throw std::invalid_argument("generate_mesh: h_max leaves the annular gap unresolved");

    const double ccx = r_out, ccy = r_out;
    const double d = 0.999 * h_max / std::sqrt(2.0);
    int nr = std::max(1, (int)std::ceil(gap / d));
    int nt = std::max(8, (int)std::ceil(2.0 * kPi * r_out / d));

    for (int attempt = 0; attempt < 8; ++attempt) {
        Mesh mesh;
        mesh.vertices.reserve((nr + 1) * nt);
        for (int i = 0; i <= nr; ++i) {
            const double r = r_in + gap * i / nr;
            for (int j = 0; j < nt; ++j) {
                const double th = 2.0 * kPi * j / nt;
                mesh.vertices.push_back({ccx + r * std::cos(th), ccy + r * std::sin(th)});
            }
        }
        auto vid = [&](int i, int j) { return i * nt + (j % nt); };
        for (int i = 0; i < nr; ++i)
            for (int j = 0; j < nt; ++j) {
                mesh.elements.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)});
                mesh.elements.push_back({vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)});
            }
        double max_h = 0.0;
        for (int e = 0; e < mesh.n_elements(); ++e) {
            const auto& el = mesh.elements[e];
            for (int k = 0; k < 3; ++k)
                max_h = std::max(max_h, dist(mesh.vertices[el[k]], mesh.vertices[el[(k + 1) % 3]]));
        }
        if (max_h <= h_max) return mesh;
        const double grow = 1.02 * max_h / h_max;
        nr = (int)std::ceil(nr * grow);
        nt = (int)std::ceil(nt * grow);
    }
    throw std::runtime_error("generate_mesh: annulus sizing did not converge");
}

std::vector<std::pair<int, int>> oriented_boundary_edges(const Mesh& mesh) {
    // boundary edges oriented as they appear in their (positively oriented)
    // owner element, i.e. with the domain on the left
    std::vector<std::tuple<int, int, int, int>> edges;  // (min, max, a, b)
    edges.reserve(3 * mesh.elements.size());
    for (const auto& el : mesh.elements)
        for (int k = 0; k < 3; ++k) {
            const int a = el[k], b = el[(k + 1) % 3];
            edges.emplace_back(std::min(a, b), std::max(a, b), a, b);
        }
    std::sort(edges.begin(), edges.end());
    std::vector<std::pair<int, int>> out;
    std::size_t i = 0;
    while (i < edges.size()) {
        std::size_t j = i + 1;
        while (j < edges.size() && std::get<0>(edges[j]) == std::get<0>(edges[i]) &&
               std::get<1>(edges[j]) == std::get<1>(edges[i]))
            ++j;
        if (j - i == 1) out.emplace_back(std::get<2>(edges[i]), std::get<3>(edges[i]));
        i = j;
    }
    return out;
}

void tag_boundary(Mesh& mesh, const GeometrySpec& spec) {
    const auto open_edges = oriented_boundary_edges(mesh);
    mesh.boundary_edges.clear();
    mesh.boundary_edges.reserve(open_edges.size());

    if (spec.kind == GeometryKind::BackStep) {
        const double total_len = spec.inflow_length + spec.outflow_length;
        const double tol = 1e-9 * total_len;
        for (auto [a, b] : open_edges) {
            const double xa = mesh.vertices[a][0], xb = mesh.vertices[b][0];
            BoundaryTag tag = BoundaryTag::Wall;
            if (std::abs(xa) < tol && std::abs(xb) < tol)
                tag = BoundaryTag::Inlet;
            else if (std::abs(xa - total_len) < tol && std::abs(xb - total_len) < tol)
                tag = BoundaryTag::Outlet;
            mesh.boundary_edges.push_back({a, b, tag});
        }
    } else {
        const double ccx = spec.outer_radius, ccy = spec.outer_radius;
        const double tol = 1e-9 * spec.outer_radius;
        for (auto [a, b] : open_edges) {
            const double ra = std::hypot(mesh.vertices[a][0] - ccx, mesh.vertices[a][1] - ccy);
            const double rb = std::hypot(mesh.vertices[b][0] - ccx, mesh.vertices[b][1] - ccy);
            const bool inner = std::abs(ra - spec.inner_radius) < tol && std::abs(rb - spec.inner_radius) < tol;
            mesh.boundary_edges.push_back({a, b, inner ? BoundaryTag::MovingWall : BoundaryTag::Wall});
        }
    }
}

}  // namespace

// in mesh_obstacle.cpp
Mesh carve_obstacle(const Mesh& base, const Obstacle& obstacle, double h_max);

Mesh generate_mesh(const GeometrySpec& spec, double h_max) {
    spec.validate();
    if (!(h_max > 0.0)) throw std::invalid_argument("generate_mesh: h_max must be positive");

    // A scaled geometry is generated at the unscaled size with a widened
    // target, then shrunk, so that identical division counts are used.
    double base_h = h_max;
    if (spec.transform.kind == TransformKind::Scale) base_h = h_max / spec.transform.scale_factor;

    Mesh mesh = spec.kind == GeometryKind::BackStep ? generate_backstep(spec, base_h)
                                                    : generate_annulus(spec, base_h);
    tag_boundary(mesh, spec);
    if (spec.obstacle.kind != ObstacleKind::None) mesh = carve_obstacle(mesh, spec.obstacle, base_h);
    if (spec.transform.kind != TransformKind::Identity) {
        mesh.finalize();  // h/neighbors needed before transform copies them
        mesh = apply_transform(mesh, spec.transform);
    }
    mesh.finalize();
    return mesh;
}

Mesh apply_transform(const Mesh& mesh, const Transform& t) {
    Mesh out = mesh;
    switch (t.kind) {
        case TransformKind::Identity:
            break;
        case TransformKind::MirrorX:
            for (auto& v : out.vertices) v[0] = -v[0];
            for (auto& el : out.elements) std::swap(el[1], el[2]);  // restore orientation
            break;
        case TransformKind::Rotate90CCW:
            for (auto& v : out.vertices) {
                const double x = v[0], y = v[1];
                v[0] = -y;
                v[1] = x;
            }
            break;
        case TransformKind::Scale: {
            const double f = t.scale_factor;
            if (!(f > 0.0)) throw std::invalid_argument("apply_transform: scale factor must be positive");
            for (auto& v : out.vertices) {
                v[0] *= f;
                v[1] *= f;
            }
            for (auto& he : out.h) he *= f;
            break;
        }
    }
    return out;
}

void save_mesh(const Mesh& mesh, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("save_mesh: cannot open " + path);
    f << "vertices " << mesh.n_vertices() << " elements " << mesh.n_elements() << "\n";
    char buf[80];
    for (const auto& v : mesh.vertices) {
        std::snprintf(buf, sizeof buf, "%.17g %.17g\n", v[0], v[1]);
        f << buf;
    }
    for (const auto& el : mesh.elements) f << el[0] << " " << el[1] << " " << el[2] << "\n";
    for (const auto& be : mesh.boundary_edges)
        f << be.a << " " << be.b << " " << to_string(be.tag) << "\n";
    if (!f) throw std::runtime_error("save_mesh: write failed for " + path);
}

Mesh load_mesh(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("load_mesh: cannot open " + path);
    std::string kw1, kw2;
    int nv = 0, ne = 0;
    f >> kw1 >> nv >> kw2 >> ne;
    if (!f || kw1 != "vertices" || kw2 != "elements")
        throw std::runtime_error("load_mesh: bad header in " + path);
    Mesh mesh;
    mesh.vertices.resize(nv);
    for (auto& v : mesh.vertices) f >> v[0] >> v[1];
    mesh.elements.resize(ne);
    for (auto& el : mesh.elements) f >> el[0] >> el[1] >> el[2];
    if (!f) throw std::runtime_error("load_mesh: truncated file " + path);
    int a, b;
    std::string tag;
    while (f >> a >> b >> tag) mesh.boundary_edges.push_back({a, b, boundary_tag_from_string(tag)});
    mesh.finalize();
    return mesh;
}

}  // namespace ptcflow
