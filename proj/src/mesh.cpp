#include "dforge/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <unordered_map>

#include "dforge/error.hpp"

namespace dforge {

namespace {

double signed_area(const Point& a, const Point& b, const Point& c) {
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

double segment_distance(const Point& p, const Point& a, const Point& b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double s = len2 > 0.0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
  s = std::clamp(s, 0.0, 1.0);
  const double qx = a.x + s * dx - p.x;
  const double qy = a.y + s * dy - p.y;
  return std::sqrt(qx * qx + qy * qy);
}

// Edge -> number of incident triangles.
std::unordered_map<std::uint64_t, int> edge_counts(const std::vector<Triangle>& tris) {
  std::unordered_map<std::uint64_t, int> counts;
  counts.reserve(tris.size() * 2);
  for (const auto& t : tris) {
    for (int e = 0; e < 3; ++e) ++counts[edge_key(t[e], t[(e + 1) % 3])];
  }
  return counts;
}

std::vector<bool> boundary_flags(int num_nodes, const std::vector<Triangle>& tris) {
  std::vector<bool> flags(num_nodes, false);
  const auto counts = edge_counts(tris);
  for (const auto& t : tris) {
    for (int e = 0; e < 3; ++e) {
      const int a = t[e];
      const int b = t[(e + 1) % 3];
      if (counts.at(edge_key(a, b)) == 1) {
        flags[a] = true;
        flags[b] = true;
      }
    }
  }
  return flags;
}

std::vector<int> tag_boundary(const std::vector<Point>& nodes, const std::vector<bool>& on_bdry,
                              const BoundaryFn& boundary_fn) {
  std::vector<int> tags(nodes.size(), 0);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (!on_bdry[i]) continue;
    tags[i] = boundary_fn ? boundary_fn(nodes[i]) : 1;
  }
  return tags;
}

}  // namespace

TriMesh::TriMesh(std::vector<Point> nodes, std::vector<Triangle> triangles,
                 std::vector<int> region_tags, std::vector<int> boundary_tags)
    : nodes_(std::move(nodes)),
      triangles_(std::move(triangles)),
      region_tags_(std::move(region_tags)),
      boundary_tags_(std::move(boundary_tags)) {
  if (nodes_.empty()) throw ValidationError("mesh has no nodes");
  if (triangles_.empty()) throw ValidationError("mesh has no triangles");
  if (region_tags_.size() != triangles_.size())
    throw ValidationError("region tag count does not match triangle count");
  if (boundary_tags_.size() != nodes_.size())
    throw ValidationError("boundary tag count does not match node count");
  validate();
  build_topology();
  for (int i = 0; i < num_nodes(); ++i) {
    if (boundary_tags_[i] != 0 && !on_boundary_[i])
      throw ValidationError("interior node " + std::to_string(i) + " carries boundary tag " +
                            std::to_string(boundary_tags_[i]));
  }
  build_locator();

  // Hanging nodes: a vertex lying inside a boundary edge of another triangle.
  const auto counts = edge_counts(triangles_);
  for (const auto& t : triangles_) {
    for (int e = 0; e < 3; ++e) {
      const int a = t[e];
      const int b = t[(e + 1) % 3];
      if (counts.at(edge_key(a, b)) != 1) continue;
      const Point& pa = nodes_[a];
      const Point& pb = nodes_[b];
      const double len = std::hypot(pb.x - pa.x, pb.y - pa.y);
      const Point mid{0.5 * (pa.x + pb.x), 0.5 * (pa.y + pb.y)};
      const int ix = std::clamp(static_cast<int>((mid.x - bbox_.xmin) / bbox_.width() * grid_nx_), 0, grid_nx_ - 1);
      const int iy = std::clamp(static_cast<int>((mid.y - bbox_.ymin) / bbox_.height() * grid_ny_), 0, grid_ny_ - 1);
      for (int cand : buckets_[iy * grid_nx_ + ix]) {
        for (int v : triangles_[cand]) {
          if (v == a || v == b) continue;
          const Point& pv = nodes_[v];
          if (segment_distance(pv, pa, pb) > 1e-12 * len) continue;
          const double s = ((pv.x - pa.x) * (pb.x - pa.x) + (pv.y - pa.y) * (pb.y - pa.y)) / (len * len);
          if (s > 1e-9 && s < 1.0 - 1e-9)
            throw ValidationError("hanging node " + std::to_string(v) + " on boundary edge (" +
                                  std::to_string(a) + "," + std::to_string(b) + ")");
        }
      }
    }
  }
}

void TriMesh::validate() const {
  const int n = num_nodes();
  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    const auto& tri = triangles_[t];
    for (int v : tri) {
      if (v < 0 || v >= n)
        throw ValidationError("triangle " + std::to_string(t) + " references node " +
                              std::to_string(v) + " out of range [0," + std::to_string(n) + ")");
    }
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2])
      throw ValidationError("triangle " + std::to_string(t) + " has repeated nodes");
    if (!(signed_area(nodes_[tri[0]], nodes_[tri[1]], nodes_[tri[2]]) > 0.0))
      throw ValidationError("triangle " + std::to_string(t) + " has nonpositive signed area");
  }
  for (const auto& [key, count] : edge_counts(triangles_)) {
    if (count > 2)
      throw ValidationError("nonconforming mesh: edge (" + std::to_string(key >> 32) + "," +
                            std::to_string(key & 0xffffffffu) + ") shared by " +
                            std::to_string(count) + " triangles");
  }
}

void TriMesh::build_topology() {
  on_boundary_ = boundary_flags(num_nodes(), triangles_);
  bbox_ = Rect{std::numeric_limits<double>::max(), std::numeric_limits<double>::max(),
               std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest()};
  for (const auto& p : nodes_) {
    bbox_.xmin = std::min(bbox_.xmin, p.x);
    bbox_.xmax = std::max(bbox_.xmax, p.x);
    bbox_.ymin = std::min(bbox_.ymin, p.y);
    bbox_.ymax = std::max(bbox_.ymax, p.y);
  }
}

void TriMesh::build_locator() {
  const double side = std::sqrt(static_cast<double>(triangles_.size()));
  grid_nx_ = std::max(1, static_cast<int>(side));
  grid_ny_ = grid_nx_;
  buckets_.assign(static_cast<std::size_t>(grid_nx_) * grid_ny_, {});
  const double margin = 1e-9 * (1.0 + diameter());
  const double w = bbox_.width();
  const double h = bbox_.height();
  auto cell_x = [&](double x) {
    return std::clamp(static_cast<int>((x - bbox_.xmin) / w * grid_nx_), 0, grid_nx_ - 1);
  };
  auto cell_y = [&](double y) {
    return std::clamp(static_cast<int>((y - bbox_.ymin) / h * grid_ny_), 0, grid_ny_ - 1);
  };
  for (int t = 0; t < num_triangles(); ++t) {
    double x0 = std::numeric_limits<double>::max(), x1 = std::numeric_limits<double>::lowest();
    double y0 = x0, y1 = x1;
    for (int v : triangles_[t]) {
      x0 = std::min(x0, nodes_[v].x);
      x1 = std::max(x1, nodes_[v].x);
      y0 = std::min(y0, nodes_[v].y);
      y1 = std::max(y1, nodes_[v].y);
    }
    for (int iy = cell_y(y0 - margin); iy <= cell_y(y1 + margin); ++iy)
      for (int ix = cell_x(x0 - margin); ix <= cell_x(x1 + margin); ++ix)
        buckets_[iy * grid_nx_ + ix].push_back(t);
  }
}

double TriMesh::triangle_area(int t) const {
  const auto& tri = triangles_[t];
  return signed_area(nodes_[tri[0]], nodes_[tri[1]], nodes_[tri[2]]);
}

Point TriMesh::centroid(int t) const {
  const auto& tri = triangles_[t];
  return {(nodes_[tri[0]].x + nodes_[tri[1]].x + nodes_[tri[2]].x) / 3.0,
          (nodes_[tri[0]].y + nodes_[tri[1]].y + nodes_[tri[2]].y) / 3.0};
}

double TriMesh::total_area() const {
  double sum = 0.0;
  for (int t = 0; t < num_triangles(); ++t) sum += triangle_area(t);
  return sum;
}

double TriMesh::region_area(int tag) const {
  double sum = 0.0;
  for (int t = 0; t < num_triangles(); ++t)
    if (region_tags_[t] == tag) sum += triangle_area(t);
  return sum;
}

double TriMesh::diameter() const { return std::hypot(bbox_.width(), bbox_.height()); }

std::vector<int> TriMesh::boundary_nodes() const {
  std::vector<int> out;
  for (int i = 0; i < num_nodes(); ++i)
    if (on_boundary_[i]) out.push_back(i);
  return out;
}

std::vector<int> TriMesh::nodes_with_boundary_tag(int tag) const {
  std::vector<int> out;
  for (int i = 0; i < num_nodes(); ++i)
    if (on_boundary_[i] && boundary_tags_[i] == tag) out.push_back(i);
  return out;
}

std::vector<int> TriMesh::nodes_of_region(int tag) const {
  std::vector<bool> mark(nodes_.size(), false);
  for (int t = 0; t < num_triangles(); ++t)
    if (region_tags_[t] == tag)
      for (int v : triangles_[t]) mark[v] = true;
  std::vector<int> out;
  for (int i = 0; i < num_nodes(); ++i)
    if (mark[i]) out.push_back(i);
  return out;
}

std::vector<std::array<int, 2>> TriMesh::edges() const {
  std::vector<std::array<int, 2>> out;
  std::unordered_map<std::uint64_t, int> seen;
  seen.reserve(triangles_.size() * 2);
  for (const auto& t : triangles_) {
    for (int e = 0; e < 3; ++e) {
      const int a = t[e];
      const int b = t[(e + 1) % 3];
      if (seen.emplace(edge_key(a, b), static_cast<int>(out.size())).second)
        out.push_back({std::min(a, b), std::max(a, b)});
    }
  }
  return out;
}

std::array<double, 3> TriMesh::barycentric(int t, const Point& p) const {
  const auto& tri = triangles_[t];
  const Point& a = nodes_[tri[0]];
  const Point& b = nodes_[tri[1]];
  const Point& c = nodes_[tri[2]];
  const double area = signed_area(a, b, c);
  const double l1 = signed_area(a, p, c) / area;
  const double l2 = signed_area(a, b, p) / area;
  return {1.0 - l1 - l2, l1, l2};
}

PointLocation TriMesh::locate(const Point& p, double tol) const {
  if (p.x < bbox_.xmin - tol || p.x > bbox_.xmax + tol || p.y < bbox_.ymin - tol ||
      p.y > bbox_.ymax + tol) {
    throw LocationFailure("point (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                          ") outside mesh bounding box");
  }
  const int ix = std::clamp(static_cast<int>((p.x - bbox_.xmin) / bbox_.width() * grid_nx_), 0, grid_nx_ - 1);
  const int iy = std::clamp(static_cast<int>((p.y - bbox_.ymin) / bbox_.height() * grid_ny_), 0, grid_ny_ - 1);
  const auto& candidates = buckets_[iy * grid_nx_ + ix];

  auto finish = [](int t, std::array<double, 3> bary) {
    double sum = 0.0;
    for (double& l : bary) {
      l = std::max(l, 0.0);
      sum += l;
    }
    for (double& l : bary) l /= sum;
    return PointLocation{t, bary};
  };

  // Candidates are stored in ascending triangle order, so the first hit is
  // the lowest-index containing triangle.
  constexpr double kInside = -1e-12;
  for (int t : candidates) {
    const auto bary = barycentric(t, p);
    if (bary[0] >= kInside && bary[1] >= kInside && bary[2] >= kInside) return finish(t, bary);
  }

  int best = -1;
  double best_dist = tol;
  for (int t : candidates) {
    const auto& tri = triangles_[t];
    double d = std::numeric_limits<double>::max();
    for (int e = 0; e < 3; ++e)
      d = std::min(d, segment_distance(p, nodes_[tri[e]], nodes_[tri[(e + 1) % 3]]));
    if (d <= best_dist && (best < 0 || d < best_dist)) {
      best = t;
      best_dist = d;
    }
  }
  if (best < 0) {
    throw LocationFailure("point (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                          ") is not inside the mesh");
  }
  return finish(best, barycentric(best, p));
}

TriMesh generate_structured_rect(int nx, int ny, const Rect& bounds, const RegionFn& region_fn,
                                 const BoundaryFn& boundary_fn) {
  if (nx < 1 || ny < 1) throw InvalidGeometry("structured grid needs nx, ny >= 1");
  if (!(bounds.width() > 0.0) || !(bounds.height() > 0.0))
    throw InvalidGeometry("degenerate bounds: zero width or height");

  std::vector<Point> nodes;
  nodes.reserve(static_cast<std::size_t>(nx + 1) * (ny + 1));
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      // Exact end points keep the hull bit-identical under refinement.
      const double x = i == nx ? bounds.xmax : bounds.xmin + bounds.width() * i / nx;
      const double y = j == ny ? bounds.ymax : bounds.ymin + bounds.height() * j / ny;
      nodes.push_back({x, y});
    }
  }
  auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
  std::vector<Triangle> tris;
  tris.reserve(static_cast<std::size_t>(2) * nx * ny);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      tris.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      tris.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }
  std::vector<int> regions(tris.size(), 1);
  if (region_fn) {
    for (std::size_t t = 0; t < tris.size(); ++t) {
      const auto& tri = tris[t];
      const Point c{(nodes[tri[0]].x + nodes[tri[1]].x + nodes[tri[2]].x) / 3.0,
                    (nodes[tri[0]].y + nodes[tri[1]].y + nodes[tri[2]].y) / 3.0};
      regions[t] = region_fn(c);
    }
  }
  const auto on_bdry = boundary_flags(static_cast<int>(nodes.size()), tris);
  auto tags = tag_boundary(nodes, on_bdry, boundary_fn);
  return TriMesh(std::move(nodes), std::move(tris), std::move(regions), std::move(tags));
}

TriMesh refine_uniform(const TriMesh& mesh) {
  std::vector<Point> nodes = mesh.nodes();
  std::vector<int> tags = mesh.boundary_tags();
  const auto& on_bdry = mesh.on_boundary();
  const auto counts = edge_counts(mesh.triangles());

  std::unordered_map<std::uint64_t, int> midpoint;
  midpoint.reserve(mesh.triangles().size() * 2);
  auto mid = [&](int a, int b) {
    const auto key = edge_key(a, b);
    auto it = midpoint.find(key);
    if (it != midpoint.end()) return it->second;
    const int id = static_cast<int>(nodes.size());
    nodes.push_back({0.5 * (mesh.node(a).x + mesh.node(b).x), 0.5 * (mesh.node(a).y + mesh.node(b).y)});
    int tag = 0;
    if (counts.at(key) == 1 && on_bdry[a] && on_bdry[b]) {
      const int ta = mesh.boundary_tags()[a];
      const int tb = mesh.boundary_tags()[b];
      if (ta == tb) {
        tag = ta;
      } else if (ta == 0 || tb == 0) {
        tag = std::max(ta, tb);
      } else {
        tag = std::min(ta, tb);
      }
    }
    tags.push_back(tag);
    midpoint.emplace(key, id);
    return id;
  };

  std::vector<Triangle> tris;
  std::vector<int> regions;
  tris.reserve(mesh.triangles().size() * 4);
  regions.reserve(mesh.triangles().size() * 4);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto [a, b, c] = mesh.triangle(t);
    const int ab = mid(a, b);
    const int bc = mid(b, c);
    const int ca = mid(c, a);
    tris.push_back({a, ab, ca});
    tris.push_back({ab, b, bc});
    tris.push_back({ca, bc, c});
    tris.push_back({ab, bc, ca});
    for (int k = 0; k < 4; ++k) regions.push_back(mesh.region_tags()[t]);
  }
  return TriMesh(std::move(nodes), std::move(tris), std::move(regions), std::move(tags));
}

TriMesh extract_triangles(const TriMesh& mesh, const std::function<bool(const Point&, int)>& keep,
                          const BoundaryFn& boundary_fn) {
  std::vector<int> remap(mesh.num_nodes(), -1);
  std::vector<Point> nodes;
  std::vector<Triangle> tris;
  std::vector<int> regions;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    if (!keep(mesh.centroid(t), mesh.region_tags()[t])) continue;
    Triangle tri = mesh.triangle(t);
    for (int& v : tri) {
      if (remap[v] < 0) {
        remap[v] = static_cast<int>(nodes.size());
        nodes.push_back(mesh.node(v));
      }
      v = remap[v];
    }
    tris.push_back(tri);
    regions.push_back(mesh.region_tags()[t]);
  }
  if (tris.empty()) throw InvalidGeometry("extraction removed every triangle");
  const auto on_bdry = boundary_flags(static_cast<int>(nodes.size()), tris);
  auto tags = tag_boundary(nodes, on_bdry, boundary_fn);
  return TriMesh(std::move(nodes), std::move(tris), std::move(regions), std::move(tags));
}

TriMesh with_region_tags(const TriMesh& mesh, const RegionFn& region_fn) {
  std::vector<int> regions(mesh.num_triangles());
  for (int t = 0; t < mesh.num_triangles(); ++t) regions[t] = region_fn(mesh.centroid(t));
  return TriMesh(mesh.nodes(), mesh.triangles(), std::move(regions), mesh.boundary_tags());
}

TriMesh with_boundary_tags(const TriMesh& mesh, const BoundaryFn& boundary_fn) {
  auto tags = tag_boundary(mesh.nodes(), mesh.on_boundary(), boundary_fn);
  return TriMesh(mesh.nodes(), mesh.triangles(), mesh.region_tags(), std::move(tags));
}

std::string save_mesh(const TriMesh& mesh) {
  std::string out = "trimesh v1\n";
  char buf[128];
  std::snprintf(buf, sizeof buf, "nodes %d\n", mesh.num_nodes());
  out += buf;
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g %d\n", mesh.node(i).x, mesh.node(i).y,
                  mesh.boundary_tags()[i]);
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "triangles %d\n", mesh.num_triangles());
  out += buf;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangle(t);
    std::snprintf(buf, sizeof buf, "%d %d %d %d\n", tri[0], tri[1], tri[2], mesh.region_tags()[t]);
    out += buf;
  }
  return out;
}

TriMesh load_mesh(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;

  // Next non-empty, non-comment line.
  auto next = [&](const char* expecting) -> std::string {
    while (std::getline(in, line)) {
      ++lineno;
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      return line;
    }
    throw ParseError(std::string("unexpected end of input, expected ") + expecting, lineno);
  };
  auto section = [&](const char* name) {
    std::istringstream ls(next(name));
    std::string word;
    long count = -1;
    std::string extra;
    if (!(ls >> word >> count) || word != name || (ls >> extra))
      throw ParseError(std::string("expected '") + name + " <count>'", lineno);
    if (count <= 0) throw ParseError(std::string("empty ") + name + " section", lineno);
    return static_cast<int>(count);
  };

  {
    std::istringstream ls(next("header"));
    std::string a, b, extra;
    if (!(ls >> a >> b) || a != "trimesh" || b != "v1" || (ls >> extra))
      throw ParseError("expected header 'trimesh v1'", lineno);
  }
  const int n = section("nodes");
  std::vector<Point> nodes(n);
  std::vector<int> tags(n);
  for (int i = 0; i < n; ++i) {
    std::istringstream ls(next("node line"));
    std::string extra;
    if (!(ls >> nodes[i].x >> nodes[i].y >> tags[i]) || (ls >> extra))
      throw ParseError("malformed node line, expected 'x y boundary_tag'", lineno);
  }
  const int m = section("triangles");
  std::vector<Triangle> tris(m);
  std::vector<int> regions(m);
  for (int t = 0; t < m; ++t) {
    std::istringstream ls(next("triangle line"));
    std::string extra;
    if (!(ls >> tris[t][0] >> tris[t][1] >> tris[t][2] >> regions[t]) || (ls >> extra))
      throw ParseError("malformed triangle line, expected 'i j k region_tag'", lineno);
  }
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first != std::string::npos && line[first] != '#')
      throw ParseError("trailing content after triangle section", lineno);
  }
  return TriMesh(std::move(nodes), std::move(tris), std::move(regions), std::move(tags));
}

void write_mesh_file(const TriMesh& mesh, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << save_mesh(mesh);
}

TriMesh read_mesh_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_mesh(ss.str());
}

}  // namespace dforge
