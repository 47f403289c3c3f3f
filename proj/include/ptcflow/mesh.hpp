#pragma once

#include <array>
#include <string>
#include <vector>

namespace ptcflow {

enum class GeometryKind { BackStep, Annulus };
enum class TransformKind { Identity, MirrorX, Rotate90CCW, Scale };
enum class ObstacleKind { None, Circle, Ellipse };

enum class BoundaryTag { Inlet, Outlet, Wall, MovingWall, ObstacleWall };

const char* to_string(BoundaryTag tag);
BoundaryTag boundary_tag_from_string(const std::string& s);

struct Transform {
    TransformKind kind = TransformKind::Identity;
    double scale_factor = 1.0;
};

struct Obstacle {
    ObstacleKind kind = ObstacleKind::None;
    double cx = 0.0, cy = 0.0;  // center (m)
    double radius = 0.0;        // circle
    double a = 0.0, b = 0.0;    // ellipse semi-axes (m)

    bool contains(double x, double y, double dilation = 0.0) const;
};

// Geometry of the supported domains. The back-step is an L-shaped channel:
// the outflow block spans [inflow_length, inflow_length + outflow_length] x
// [0, outflow_width] and the inflow tunnel [0, inflow_length] x
// [outflow_width - inflow_width, outflow_width]; the step sits at the
// junction. The annulus is centered at (outer_radius, outer_radius) so its
// bounding box starts at the origin.
struct GeometrySpec {
    GeometryKind kind = GeometryKind::BackStep;
    // back-step
    double inflow_width = 0.05;
    double inflow_length = 0.25;
    double outflow_width = 0.12;
    double outflow_length = 1.15;
    // annulus
    double inner_radius = 0.2;
    double outer_radius = 0.4;

    Obstacle obstacle;
    Transform transform;

    void validate() const;  // throws std::invalid_argument
};

struct BoundaryEdge {
    int a = -1, b = -1;
    BoundaryTag tag = BoundaryTag::Wall;
};

// Conforming triangle mesh with positively oriented elements. `neighbors`
// lists edge-adjacent element ids in ascending order, padded with -1; `h` is
// the longest edge of each element.
struct Mesh {
    std::vector<std::array<double, 2>> vertices;
    std::vector<std::array<int, 3>> elements;
    std::vector<BoundaryEdge> boundary_edges;
    std::vector<std::array<int, 3>> neighbors;
    std::vector<double> h;

    int n_vertices() const { return static_cast<int>(vertices.size()); }
    int n_elements() const { return static_cast<int>(elements.size()); }

    double element_area(int e) const;
    std::array<double, 2> element_centroid(int e) const;

    // Rebuilds neighbors and h from vertices/elements and verifies
    // conformity against boundary_edges. Throws std::runtime_error on a
    // broken mesh.
    void finalize();
};

Mesh generate_mesh(const GeometrySpec& spec, double h_max);
Mesh apply_transform(const Mesh& mesh, const Transform& t);

inline double element_size(const Mesh& mesh, int e) { return mesh.h.at(e); }

void save_mesh(const Mesh& mesh, const std::string& path);
Mesh load_mesh(const std::string& path);

// V - E + T, which equals 1 minus the number of holes for a connected
// triangulated planar domain.
int euler_characteristic(const Mesh& mesh);

}  // namespace ptcflow
