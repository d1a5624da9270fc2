#include "dforge/multifidelity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dforge/error.hpp"

namespace dforge {

namespace {

constexpr double kHullTol = 1e-9;

MeshPtr require_mesh(MeshPtr mesh, const char* what) {
  if (!mesh) throw ConfigError(std::string(what) + " mesh is missing");
  return mesh;
}

void check_hulls(const TriMesh& lofi, const TriMesh& hifi) {
  const Rect a = lofi.bounding_box();
  const Rect b = hifi.bounding_box();
  const double scale = std::max(1.0, std::max(a.width(), a.height()));
  const double box = std::max({std::abs(a.xmin - b.xmin), std::abs(a.ymin - b.ymin), std::abs(a.xmax - b.xmax),
                               std::abs(a.ymax - b.ymax)});
  const double area = std::abs(lofi.total_area() - hifi.total_area());
  if (box > kHullTol * scale || area > kHullTol * scale * scale)
    throw ProjectionError("meshes do not cover the same domain");
}

SparseMatrix assemble_cross_mass(const TriMesh& lofi, const TriMesh& hifi) {
  check_hulls(lofi, hifi);
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(hifi.num_triangles()) * 18);
  for (int t = 0; t < hifi.num_triangles(); ++t) {
    const auto& tri = hifi.triangle(t);
    const double w = hifi.triangle_area(t) / 3.0;
    for (int e = 0; e < 3; ++e) {
      const int a = tri[e];
      const int b = tri[(e + 1) % 3];
      const Point mid{0.5 * (hifi.node(a).x + hifi.node(b).x), 0.5 * (hifi.node(a).y + hifi.node(b).y)};
      PointLocation loc;
      try {
        loc = lofi.locate(mid);
      } catch (const LocationFailure&) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "quadrature point (%.17g, %.17g) lies outside the lofi mesh", mid.x, mid.y);
        throw ProjectionError(buf);
      }
      const auto& coarse = lofi.triangle(loc.triangle);
      for (int i = 0; i < 3; ++i) {
        if (loc.bary[i] == 0.0) continue;
        const double v = w * loc.bary[i] * 0.5;
        triplets.emplace_back(coarse[i], a, v);
        triplets.emplace_back(coarse[i], b, v);
      }
    }
  }
  SparseMatrix p(lofi.num_nodes(), hifi.num_nodes());
  p.setFromTriplets(triplets.begin(), triplets.end());
  p.makeCompressed();
  return p;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::vector<std::string>> read_csv_rows(const std::string& path, std::string& header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::getline(in, header);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

double parse_number(const std::string& s, int line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("bad number '" + s + "'", line);
  }
}

}  // namespace

Projector::Projector(MeshPtr lofi, MeshPtr hifi)
    : lofi_(require_mesh(std::move(lofi), "lofi")),
      hifi_(require_mesh(std::move(hifi), "hifi")),
      cross_(assemble_cross_mass(*lofi_, *hifi_)),
      mass_(assemble_mass(*lofi_)),
      solver_(mass_) {}

Vector Projector::project(const Vector& hifi_coeffs) const {
  if (hifi_coeffs.size() != hifi_->num_nodes())
    throw DimensionError("projection input has " + std::to_string(hifi_coeffs.size()) + " entries for " +
                         std::to_string(hifi_->num_nodes()) + " hifi nodes");
  if (!hifi_coeffs.allFinite()) throw ProjectionError("hifi field is not finite");
  return solver_.solve(Vector(cross_ * hifi_coeffs));
}

Matrix Projector::project(const Matrix& hifi_states) const {
  if (hifi_states.rows() != hifi_->num_nodes()) throw DimensionError("projection input has wrong row count");
  if (!hifi_states.allFinite()) throw ProjectionError("hifi states are not finite");
  return solver_.solve(Matrix(cross_ * hifi_states));
}

Trajectory Projector::project(const Trajectory& hifi) const {
  return Trajectory(hifi.grid, project(hifi.states), lofi_);
}

FeField galerkin_project(const FeField& hifi_field, const MeshPtr& lofi_mesh) {
  const Projector projector(lofi_mesh, hifi_field.mesh);
  return FeField(lofi_mesh, projector.project(hifi_field.coeffs));
}

void FidelityPair::validate() const {
  lofi.validate();
  hifi.validate();
  if (!lofi.grid.same_as(hifi.grid)) throw ConfigError("lofi and hifi time grids differ");
  normalize_samples(samples, lofi.grid.steps);
}

std::vector<int> normalize_samples(std::vector<int> samples, int steps) {
  std::sort(samples.begin(), samples.end());
  samples.erase(std::unique(samples.begin(), samples.end()), samples.end());
  if (samples.empty()) throw ConfigError("sample set is empty");
  if (samples.front() < 0 || samples.back() > steps)
    throw ConfigError("sample indices must lie in [0, " + std::to_string(steps) + "]");
  return samples;
}

DiscrepancyDataset build_discrepancy_dataset(const Projector& projector, const Trajectory& lofi_traj,
                                             const Trajectory& hifi_traj, const std::vector<int>& samples) {
  if (!lofi_traj.grid.same_as(hifi_traj.grid)) throw ConfigError("lofi and hifi trajectories use different grids");
  if (lofi_traj.num_dofs() != projector.lofi_mesh()->num_nodes())
    throw ConfigError("lofi trajectory does not match the projector's lofi mesh");
  DiscrepancyDataset d;
  d.mesh = projector.lofi_mesh();
  d.lofi = Trajectory(lofi_traj.grid, lofi_traj.states, d.mesh);
  d.samples = normalize_samples(samples, lofi_traj.grid.steps);
  Matrix hifi_at(hifi_traj.num_dofs(), static_cast<Eigen::Index>(d.samples.size()));
  for (std::size_t j = 0; j < d.samples.size(); ++j) hifi_at.col(static_cast<Eigen::Index>(j)) = hifi_traj.states.col(d.samples[j]);
  d.snapshots = projector.project(hifi_at);
  for (std::size_t j = 0; j < d.samples.size(); ++j)
    d.snapshots.col(static_cast<Eigen::Index>(j)) -= lofi_traj.states.col(d.samples[j]);
  for (int k = 0, j = 0; k <= lofi_traj.grid.steps; ++k) {
    if (j < static_cast<int>(d.samples.size()) && d.samples[j] == k) {
      ++j;
    } else {
      d.upsample_indices.push_back(k);
    }
  }
  d.beta.assign(d.samples.size(), 1.0);
  return d;
}

DiscrepancyDataset build_discrepancy_dataset(const FidelityPair& pair, const Trajectory& lofi_traj,
                                             const Trajectory& hifi_traj) {
  if (!lofi_traj.grid.same_as(pair.lofi.grid) || !hifi_traj.grid.same_as(pair.hifi.grid))
    throw ConfigError("trajectory grids do not match the fidelity pair");
  const Projector projector(pair.lofi.mesh, pair.hifi.mesh);
  return build_discrepancy_dataset(projector, lofi_traj, hifi_traj, pair.samples);
}

Trajectory dense_discrepancy(const Projector& projector, const Trajectory& lofi_traj, const Trajectory& hifi_traj) {
  if (!lofi_traj.grid.same_as(hifi_traj.grid)) throw ConfigError("lofi and hifi trajectories use different grids");
  Matrix delta = projector.project(hifi_traj.states) - lofi_traj.states;
  return Trajectory(lofi_traj.grid, std::move(delta), projector.lofi_mesh());
}

ValidationResult validation_check(const Trajectory& discrepancy, const MassNorm& norm, double bound) {
  if (!(bound > 0.0)) throw ConfigError("validation bound must be positive");
  ValidationResult r;
  const int steps = discrepancy.grid.steps;
  if (steps == 0) {
    r.value = norm.squared(discrepancy.states.col(0));
  } else {
    double sum = 0.0;
    for (int k = 0; k < steps; ++k) sum += norm.squared(discrepancy.states.col(k)) * discrepancy.grid.dt;
    r.value = sum / (steps * discrepancy.grid.dt);
  }
  r.tenable = r.value <= bound;
  return r;
}

ValidationResult validation_check(const Trajectory& discrepancy, double bound) {
  if (!discrepancy.mesh) throw ConfigError("discrepancy trajectory has no mesh");
  return validation_check(discrepancy, MassNorm(*discrepancy.mesh), bound);
}

void write_dataset(const DiscrepancyDataset& dataset, const std::string& dir) {
  std::filesystem::create_directories(dir);
  write_trajectory_csv(dataset.lofi, dir + "/lofi_trajectory.csv");
  {
    std::ofstream out(dir + "/sample_indices.csv", std::ios::binary);
    out << "index,t\n";
    for (int k : dataset.samples) out << k << ',' << fmt(dataset.grid().time(k)) << '\n';
  }
  std::ofstream out(dir + "/delta_ground_truth.csv", std::ios::binary);
  out << "index,t";
  for (int i = 0; i < dataset.num_dofs(); ++i) out << ",dof_" << i;
  out << '\n';
  for (std::size_t j = 0; j < dataset.samples.size(); ++j) {
    const int k = dataset.samples[j];
    std::string row = std::to_string(k) + ',' + fmt(dataset.grid().time(k));
    for (int i = 0; i < dataset.num_dofs(); ++i) row += ',' + fmt(dataset.snapshots(i, static_cast<Eigen::Index>(j)));
    out << row << '\n';
  }
}

DiscrepancyDataset read_dataset(const std::string& dir, MeshPtr mesh) {
  DiscrepancyDataset d;
  d.mesh = mesh;
  d.lofi = read_trajectory_csv(dir + "/lofi_trajectory.csv", mesh);
  std::string header;
  const auto rows = read_csv_rows(dir + "/delta_ground_truth.csv", header);
  const auto n = static_cast<Eigen::Index>(std::count(header.begin(), header.end(), ',') - 1);
  if (n != d.lofi.num_dofs()) throw ParseError("discrepancy width does not match the lofi trajectory", 1);
  d.snapshots.resize(n, static_cast<Eigen::Index>(rows.size()));
  for (std::size_t j = 0; j < rows.size(); ++j) {
    const int line = static_cast<int>(j) + 2;
    if (static_cast<Eigen::Index>(rows[j].size()) != n + 2) throw ParseError("wrong column count", line);
    d.samples.push_back(static_cast<int>(parse_number(rows[j][0], line)));
    for (Eigen::Index i = 0; i < n; ++i)
      d.snapshots(i, static_cast<Eigen::Index>(j)) = parse_number(rows[j][static_cast<std::size_t>(i) + 2], line);
  }
  if (normalize_samples(d.samples, d.lofi.grid.steps) != d.samples)
    throw ParseError("sample indices must be strictly increasing", 2);
  for (int k = 0, j = 0; k <= d.lofi.grid.steps; ++k) {
    if (j < static_cast<int>(d.samples.size()) && d.samples[j] == k) {
      ++j;
    } else {
      d.upsample_indices.push_back(k);
    }
  }
  d.beta.assign(d.samples.size(), 1.0);
  return d;
}

}  // namespace dforge
