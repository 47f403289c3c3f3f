#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <vector>

#include "ptcflow/mesh.hpp"

namespace ptcflow {

namespace {

constexpr double kPi = 3.14159265358979323846;

using Pt = std::array<double, 2>;

double tri_area(const Pt& a, const Pt& b, const Pt& c) {
    return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]));
}

double dist(const Pt& a, const Pt& b) { return std::hypot(b[0] - a[0], b[1] - a[1]); }

// > 0 when d lies inside the circumcircle of the ccw triangle (a, b, c)
double incircle(const Pt& a, const Pt& b, const Pt& c, const Pt& d) {
    const double ax = a[0] - d[0], ay = a[1] - d[1];
    const double bx = b[0] - d[0], by = b[1] - d[1];
    const double cx = c[0] - d[0], cy = c[1] - d[1];
    const double a2 = ax * ax + ay * ay, b2 = bx * bx + by * by, c2 = cx * cx + cy * cy;
    return ax * (by * c2 - b2 * cy) - ay * (bx * c2 - b2 * cx) + a2 * (bx * cy - by * cx);
}

std::vector<Pt> obstacle_ring(const Obstacle& ob, double spacing) {
    double perimeter;
    if (ob.kind == ObstacleKind::Circle) {
        perimeter = 2.0 * kPi * ob.radius;
    } else {
        const double a = ob.a, b = ob.b;  // Ramanujan approximation
        perimeter = kPi * (3.0 * (a + b) - std::sqrt((3.0 * a + b) * (a + 3.0 * b)));
    }
    const int k = std::max(12, (int)std::round(perimeter / spacing));
    std::vector<Pt> ring(k);
    for (int i = 0; i < k; ++i) {
        const double t = 2.0 * kPi * i / k;
        if (ob.kind == ObstacleKind::Circle)
            ring[i] = {ob.cx + ob.radius * std::cos(t), ob.cy + ob.radius * std::sin(t)};
        else
            ring[i] = {ob.cx + ob.a * std::cos(t), ob.cy + ob.b * std::sin(t)};
    }
    return ring;
}

struct Tri {
    int v[3];
};

// Flips strip diagonals toward the Delaunay criterion. Edges on the strip
// rim (shared with the kept mesh or on the obstacle) occur once in the edge
// map and are never flipped.
void delaunay_flip_pass(std::vector<Tri>& tris, const std::vector<Pt>& pts, double area_eps) {
    for (int pass = 0; pass < 20; ++pass) {
        bool flipped = false;
        std::map<std::pair<int, int>, std::vector<int>> edge_map;
        for (int t = 0; t < (int)tris.size(); ++t)
            for (int k = 0; k < 3; ++k) {
                int a = tris[t].v[k], b = tris[t].v[(k + 1) % 3];
                if (a > b) std::swap(a, b);
                edge_map[{a, b}].push_back(t);
            }
        for (const auto& [edge, owners] : edge_map) {
            if (owners.size() != 2) continue;
            Tri& t1 = tris[owners[0]];
            Tri& t2 = tris[owners[1]];
            auto opposite = [&](const Tri& t) {
                for (int k = 0; k < 3; ++k)
                    if (t.v[k] != edge.first && t.v[k] != edge.second) return t.v[k];
                return -1;
            };
            const int c = opposite(t1), d = opposite(t2);
            if (c < 0 || d < 0 || c == d) continue;
            // orient the shared edge as it appears in t1
            int a = edge.first, b = edge.second;
            for (int k = 0; k < 3; ++k)
                if (t1.v[k] == edge.second && t1.v[(k + 1) % 3] == edge.first) {
                    a = edge.second;
                    b = edge.first;
                    break;
                }
            if (incircle(pts[a], pts[b], pts[c], pts[d]) <= 0.0) continue;
            const double a1 = tri_area(pts[a], pts[d], pts[c]);
            const double a2 = tri_area(pts[d], pts[b], pts[c]);
            if (a1 <= area_eps || a2 <= area_eps) continue;
            t1.v[0] = a; t1.v[1] = d; t1.v[2] = c;
            t2.v[0] = d; t2.v[1] = b; t2.v[2] = c;
            flipped = true;
            break;  // edge map is stale after a flip
        }
        if (!flipped) return;
    }
}

}  // namespace

// Removes the elements covered by the obstacle (plus a safety margin) from a
// structured mesh and re-triangulates the gap between the resulting cavity
// and a polygonal sampling of the obstacle boundary.
Mesh carve_obstacle(const Mesh& base, const Obstacle& obstacle, double h_max) {
    const double cell = h_max / std::sqrt(2.0);
    const double margin = 0.5 * cell;

    const int ne = base.n_elements();
    std::vector<char> removed(ne, 0);
    for (int e = 0; e < ne; ++e) {
        const auto& el = base.elements[e];
        bool hit = false;
        for (int k = 0; k < 3 && !hit; ++k) {
            const auto& p = base.vertices[el[k]];
            const auto& q = base.vertices[el[(k + 1) % 3]];
            hit = obstacle.contains(p[0], p[1], margin) ||
                  obstacle.contains(0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1]), margin);
        }
        const auto c = base.element_centroid(e);
        removed[e] = hit || obstacle.contains(c[0], c[1], margin);
    }
    if (std::count(removed.begin(), removed.end(), char(1)) == 0)
        throw std::invalid_argument("carve_obstacle: obstacle is unresolved at this h_max");

    // the cavity must not touch the domain boundary
    std::vector<char> on_boundary(base.n_vertices(), 0);
    for (const auto& be : base.boundary_edges) on_boundary[be.a] = on_boundary[be.b] = 1;
    for (int e = 0; e < ne; ++e)
        if (removed[e])
            for (int k = 0; k < 3; ++k)
                if (on_boundary[base.elements[e][k]])
                    throw std::invalid_argument(
                        "carve_obstacle: obstacle too close to the domain boundary for this h_max");

    // cavity loop: edges between a kept and a removed element, oriented so
    // the cavity lies on the left
    std::map<int, int> loop_next;  // vertex -> next vertex, ccw
    std::map<std::pair<int, int>, std::vector<int>> edge_elems;
    for (int e = 0; e < ne; ++e) {
        const auto& el = base.elements[e];
        for (int k = 0; k < 3; ++k) {
            int a = el[k], b = el[(k + 1) % 3];
            std::pair<int, int> key{std::min(a, b), std::max(a, b)};
            edge_elems[key].push_back(e);
        }
    }
    for (int e = 0; e < ne; ++e) {
        if (removed[e]) continue;
        const auto& el = base.elements[e];
        for (int k = 0; k < 3; ++k) {
            const int a = el[k], b = el[(k + 1) % 3];
            const auto& owners = edge_elems[{std::min(a, b), std::max(a, b)}];
            if (owners.size() != 2) continue;
            const int other = owners[0] == e ? owners[1] : owners[0];
            if (!removed[other]) continue;
            // (a,b) has the kept domain on the left; the reversed edge walks
            // the cavity counter-clockwise
            if (loop_next.count(b)) throw std::invalid_argument("carve_obstacle: cavity is not a simple loop");
            loop_next[b] = a;
        }
    }
    if (loop_next.empty()) throw std::invalid_argument("carve_obstacle: no cavity boundary found");

    std::vector<int> loop;  // base vertex ids, ccw around the cavity
    loop.push_back(loop_next.begin()->first);
    while (true) {
        auto it = loop_next.find(loop.back());
        if (it == loop_next.end()) throw std::invalid_argument("carve_obstacle: cavity loop is broken");
        if (it->second == loop.front()) break;
        loop.push_back(it->second);
        if (loop.size() > loop_next.size())
            throw std::invalid_argument("carve_obstacle: cavity loop does not close");
    }
    if (loop.size() != loop_next.size())
        throw std::invalid_argument("carve_obstacle: cavity boundary has more than one loop");

    // compact kept vertices and elements
    Mesh out;
    std::vector<int> vmap(base.n_vertices(), -1);
    auto keep_vertex = [&](int v) {
        if (vmap[v] < 0) {
            vmap[v] = out.n_vertices();
            out.vertices.push_back(base.vertices[v]);
        }
        return vmap[v];
    };
    double base_area = 0.0;
    for (int e = 0; e < ne; ++e) {
        base_area += base.element_area(e);
        if (removed[e]) continue;
        const auto& el = base.elements[e];
        out.elements.push_back({keep_vertex(el[0]), keep_vertex(el[1]), keep_vertex(el[2])});
    }
    for (const auto& be : base.boundary_edges)
        out.boundary_edges.push_back({vmap[be.a], vmap[be.b], be.tag});

    const auto ring = obstacle_ring(obstacle, 0.8 * cell);
    const int ring_base = out.n_vertices();
    for (const auto& p : ring) out.vertices.push_back(p);

    // stitch the band between the ccw cavity loop and the ccw obstacle ring
    const int no = (int)loop.size(), ni = (int)ring.size();
    std::vector<Pt> opts(no);
    std::vector<int> oid(no);
    for (int i = 0; i < no; ++i) {
        opts[i] = base.vertices[loop[i]];
        oid[i] = vmap[loop[i]];
        if (oid[i] < 0) throw std::invalid_argument("carve_obstacle: cavity loop vertex lost");
    }

    int i0 = 0, j0 = 0;
    double best = std::numeric_limits<double>::max();
    for (int i = 0; i < no; ++i)
        for (int j = 0; j < ni; ++j) {
            const double d = dist(opts[i], ring[j]);
            if (d < best) {
                best = d;
                i0 = i;
                j0 = j;
            }
        }

    const double scale = h_max;
    const double area_eps = 1e-12 * scale * scale;
    std::vector<Tri> strip;
    strip.reserve(no + ni);
    int ai = 0, aj = 0;  // advanced counts
    int i = i0, j = j0;
    while (ai < no || aj < ni) {
        const int in = (i + 1) % no, jn = (j + 1) % ni;
        const bool can_o = ai < no, can_i = aj < ni;
        const double area_o = can_o ? tri_area(opts[i], opts[in], ring[j]) : -1.0;
        const double area_i = can_i ? tri_area(opts[i], ring[jn], ring[j]) : -1.0;
        const bool ok_o = can_o && area_o > area_eps;
        const bool ok_i = can_i && area_i > area_eps;
        bool advance_outer;
        if (ok_o && ok_i)
            advance_outer = dist(opts[in], ring[j]) <= dist(opts[i], ring[jn]);
        else if (ok_o || ok_i)
            advance_outer = ok_o;
        else
            throw std::invalid_argument("carve_obstacle: stitching failed; try a finer h_max");
        if (advance_outer) {
            strip.push_back({oid[i], oid[in], ring_base + j});
            i = in;
            ++ai;
        } else {
            strip.push_back({oid[i], ring_base + jn, ring_base + j});
            j = jn;
            ++aj;
        }
    }
    delaunay_flip_pass(strip, out.vertices, area_eps);
    for (const auto& t : strip) out.elements.push_back({t.v[0], t.v[1], t.v[2]});

    // obstacle boundary, domain on the left means walking the ring clockwise
    for (int k = 0; k < ni; ++k)
        out.boundary_edges.push_back({ring_base + (k + 1) % ni, ring_base + k, BoundaryTag::ObstacleWall});

    // coverage certificate: kept + strip must tile base minus the ring polygon
    double ring_area = 0.0;
    for (int k = 0; k < ni; ++k) {
        const auto& p = ring[k];
        const auto& q = ring[(k + 1) % ni];
        ring_area += 0.5 * (p[0] * q[1] - q[0] * p[1]);
    }
    double out_area = 0.0;
    for (int e = 0; e < out.n_elements(); ++e) {
        const double a = out.element_area(e);
        if (!(a > 0.0)) throw std::invalid_argument("carve_obstacle: degenerate stitched element");
        out_area += a;
    }
    const double expect = base_area - ring_area;
    if (std::abs(out_area - expect) > 1e-9 * base_area)
        throw std::invalid_argument("carve_obstacle: stitched mesh does not tile the domain");

    return out;
}

}  // namespace ptcflow
