#pragma once

#include <array>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace dforge {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct Rect {
  double xmin = 0.0;
  double ymin = 0.0;
  double xmax = 1.0;
  double ymax = 1.0;

  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
  double area() const { return width() * height(); }
};

using Triangle = std::array<int, 3>;
using RegionFn = std::function<int(const Point&)>;
using BoundaryFn = std::function<int(const Point&)>;

struct PointLocation {
  int triangle = -1;
  std::array<double, 3> bary{};
};

/// Conforming 2D triangulation with a region tag per triangle and a boundary
/// tag per node (0 = untagged).
///
/// Immutable after construction; the constructor validates index ranges,
/// orientation (strictly positive signed area), edge conformity and that
/// nonzero boundary tags sit on boundary nodes only.
class TriMesh {
 public:
  TriMesh(std::vector<Point> nodes, std::vector<Triangle> triangles,
          std::vector<int> region_tags, std::vector<int> boundary_tags);

  int num_nodes() const { return static_cast<int>(nodes_.size()); }
  int num_triangles() const { return static_cast<int>(triangles_.size()); }

  const std::vector<Point>& nodes() const { return nodes_; }
  const std::vector<Triangle>& triangles() const { return triangles_; }
  const std::vector<int>& region_tags() const { return region_tags_; }
  const std::vector<int>& boundary_tags() const { return boundary_tags_; }

  const Point& node(int i) const { return nodes_[i]; }
  const Triangle& triangle(int t) const { return triangles_[t]; }

  double triangle_area(int t) const;
  Point centroid(int t) const;
  double total_area() const;
  double region_area(int tag) const;
  Rect bounding_box() const { return bbox_; }
  double diameter() const;

  /// Nodes incident to an edge shared by exactly one triangle.
  const std::vector<bool>& on_boundary() const { return on_boundary_; }
  std::vector<int> boundary_nodes() const;
  std::vector<int> nodes_with_boundary_tag(int tag) const;
  /// Nodes of all triangles carrying the given region tag.
  std::vector<int> nodes_of_region(int tag) const;

  /// Edge list (sorted endpoint pairs) in first-seen order.
  std::vector<std::array<int, 2>> edges() const;

  /// Containing triangle and barycentric coordinates; lowest triangle index
  /// wins on shared edges and vertices. Points within `tol` of the hull are
  /// snapped onto the nearest triangle.
  PointLocation locate(const Point& p, double tol = 1e-10) const;

 private:
  void validate() const;
  void build_topology();
  void build_locator();
  std::array<double, 3> barycentric(int t, const Point& p) const;

  std::vector<Point> nodes_;
  std::vector<Triangle> triangles_;
  std::vector<int> region_tags_;
  std::vector<int> boundary_tags_;
  std::vector<bool> on_boundary_;
  Rect bbox_;

  // Uniform bucket grid over the bounding box for point location.
  int grid_nx_ = 1;
  int grid_ny_ = 1;
  std::vector<std::vector<int>> buckets_;
};

using MeshPtr = std::shared_ptr<const TriMesh>;

/// nx*ny cells, each split into two counterclockwise triangles along the
/// (i,j)-(i+1,j+1) diagonal. Node (i,j) has index j*(nx+1)+i.
TriMesh generate_structured_rect(int nx, int ny, const Rect& bounds,
                                 const RegionFn& region_fn = {},
                                 const BoundaryFn& boundary_fn = {});

/// Red refinement: every triangle split into four by edge midpoints. Old
/// nodes keep their indices, midpoints are appended in edge discovery order.
TriMesh refine_uniform(const TriMesh& mesh);

/// Keeps triangles whose centroid satisfies `keep`, drops unused nodes and
/// recomputes boundary tags with `boundary_fn` (all boundary nodes get tag 1
/// when no function is given).
TriMesh extract_triangles(const TriMesh& mesh,
                          const std::function<bool(const Point&, int)>& keep,
                          const BoundaryFn& boundary_fn = {});

TriMesh with_region_tags(const TriMesh& mesh, const RegionFn& region_fn);
TriMesh with_boundary_tags(const TriMesh& mesh, const BoundaryFn& boundary_fn);

inline PointLocation locate_point(const TriMesh& mesh, const Point& p) {
  return mesh.locate(p);
}

std::string save_mesh(const TriMesh& mesh);
TriMesh load_mesh(const std::string& text);

void write_mesh_file(const TriMesh& mesh, const std::string& path);
TriMesh read_mesh_file(const std::string& path);

}  // namespace dforge
