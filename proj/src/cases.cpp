#include "dforge/cases.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <set>
#include <sstream>

#include "dforge/error.hpp"

namespace dforge {

namespace {

constexpr double kGeomEps = 1e-12;
constexpr std::uint64_t kUpsampleSeedSalt = 0x5851f42d4c957f2dULL;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<ScheduleSegment> parse_schedule(const std::string& text) {
  std::vector<ScheduleSegment> out;
  for (const auto& item : split(text, ',')) {
    if (item.empty()) continue;
    const auto f = split(item, ':');
    if (f.size() != 4) throw ConfigError("schedule segment '" + item + "' must read begin:end:rate:on|off");
    ScheduleSegment s;
    try {
      s.begin = std::stoi(f[0]);
      s.end = std::stoi(f[1]);
      s.lr = std::stod(f[2]);
    } catch (const std::exception&) {
      throw ConfigError("schedule segment '" + item + "' has a malformed number");
    }
    if (f[3] == "on") {
      s.beta = true;
    } else if (f[3] != "off") {
      throw ConfigError("schedule segment '" + item + "': beta mode must be on or off");
    }
    out.push_back(s);
  }
  return out;
}

std::string schedule_to_string(const std::vector<ScheduleSegment>& schedule) {
  std::string out;
  for (const auto& s : schedule) {
    if (!out.empty()) out += ',';
    out += std::to_string(s.begin) + ':' + std::to_string(s.end) + ':' + fmt(s.lr) + ':' + (s.beta ? "on" : "off");
  }
  return out;
}

std::vector<ScheduleSegment> two_phase_schedule() { return {{0, 500, 1e-3, false}, {500, 1000, 1e-4, true}}; }

// Heat sink geometry on [-l, l]^2: a base slab on the bottom edge and three
// fins rising from it. Dimensions are given as fractions of l.
struct HeatGeometry {
  double l, base_height, base_half, fin_width, fin_height, fin_pitch;

  explicit HeatGeometry(const CaseConfig& c)
      : l(c.param("half_width")),
        base_height(l * c.param("base_height")),
        base_half(l * c.param("base_half_width")),
        fin_width(l * c.param("fin_width")),
        fin_height(l * c.param("fin_height")),
        fin_pitch(l * c.param("fin_pitch")) {}

  double fin_bottom() const { return -l + base_height; }
  double fin_top() const { return fin_bottom() + fin_height; }
  bool in_base(const Point& p) const { return p.y <= -l + base_height + kGeomEps && std::abs(p.x) <= base_half + kGeomEps; }
  int fin_index(const Point& p) const {
    if (p.y < fin_bottom() - kGeomEps || p.y > fin_top() + kGeomEps) return -1;
    for (int i = 0; i < 3; ++i) {
      const double cx = (i - 1) * fin_pitch;
      if (std::abs(p.x - cx) <= 0.5 * fin_width + kGeomEps) return i;
    }
    return -1;
  }
  bool in_conductor(const Point& p) const { return in_base(p) || fin_index(p) >= 0; }
};

// Quadrupole cross-section: yoke annulus, four square coils in the bore and
// a central aperture inside a circular outer boundary.
struct QuadGeometry {
  double radius, yoke_inner, yoke_outer, coil_center, coil_half, aperture;

  explicit QuadGeometry(const CaseConfig& c)
      : radius(c.param("radius")),
        yoke_inner(c.param("yoke_inner")),
        yoke_outer(c.param("yoke_outer")),
        coil_center(c.param("coil_center")),
        coil_half(c.param("coil_half_width")),
        aperture(c.param("aperture_radius")) {}

  int coil_index(const Point& p) const {
    static constexpr double dirs[4][2] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    for (int i = 0; i < 4; ++i) {
      const double cx = dirs[i][0] * coil_center;
      const double cy = dirs[i][1] * coil_center;
      if (std::abs(p.x - cx) <= coil_half + kGeomEps && std::abs(p.y - cy) <= coil_half + kGeomEps) return i;
    }
    return -1;
  }
  int region(const Point& p) const {
    const double r = std::hypot(p.x, p.y);
    if (r >= yoke_inner && r <= yoke_outer) return region::kYoke;
    const int coil = coil_index(p);
    if (coil >= 0) return region::kCoilFirst + coil;
    if (r < aperture) return region::kAperture;
    return region::kAir;
  }
};

// Cavity with a connector stub on each side. Walls are part of the meshed
// rectangle and pinned to zero; the hifi walls are rounded at the four
// connector junctions.
struct CavityGeometry {
  double length, height, connector_length, connector_low, connector_high, fillet;

  explicit CavityGeometry(const CaseConfig& c)
      : length(c.param("length")),
        height(c.param("height")),
        connector_length(c.param("connector_length")),
        connector_low(c.param("connector_low")),
        connector_high(c.param("connector_high")),
        fillet(c.param("fillet_radius")) {}

  bool in_fillet(const Point& p) const {
    const double xs[2] = {connector_length, length - connector_length};
    const double sxs[2] = {-1.0, 1.0};
    const double ys[2] = {connector_low, connector_high};
    const double sys[2] = {-1.0, 1.0};
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) {
        const double u = (p.x - xs[a]) * sxs[a];
        const double v = (p.y - ys[b]) * sys[b];
        if (u < 0.0 || u > fillet || v < 0.0 || v > fillet) continue;
        if (std::hypot(u - fillet, v - fillet) > fillet) return true;
      }
    }
    return false;
  }
  bool is_wall(const Point& p, Fidelity f) const {
    const bool side = p.x < connector_length || p.x > length - connector_length;
    const bool outside_channel = p.y < connector_low || p.y > connector_high;
    if (!(side && outside_channel)) return false;
    return !(f == Fidelity::Hifi && fillet > 0.0 && in_fillet(p));
  }
};

MeshPtr refined(const TriMesh& coarse, int levels, const RegionFn& region_fn, const BoundaryFn& boundary_fn) {
  TriMesh mesh = coarse;
  for (int i = 0; i < levels; ++i) mesh = refine_uniform(mesh);
  if (levels > 0) {
    mesh = with_region_tags(mesh, region_fn);
    if (boundary_fn) mesh = with_boundary_tags(mesh, boundary_fn);
  }
  return std::make_shared<const TriMesh>(std::move(mesh));
}

void require_region(const TriMesh& mesh, int tag, const std::string& what) {
  if (!(mesh.region_area(tag) > 0.0))
    throw InvalidGeometry("resolution too coarse: no triangle of the mesh lies in the " + what);
}

int checked_refinements(const CaseConfig& cfg, Fidelity f) {
  if (cfg.refinements < 1) throw ConfigError("refinements must be at least 1");
  return f == Fidelity::Hifi ? cfg.refinements : 0;
}

}  // namespace

double PiecewiseLinear::operator()(double t) const {
  if (knots.empty()) return 0.0;
  if (t <= knots.front().first) return knots.front().second;
  if (t >= knots.back().first) return knots.back().second;
  const auto hi = std::upper_bound(knots.begin(), knots.end(), t,
                                   [](double v, const std::pair<double, double>& k) { return v < k.first; });
  const auto lo = hi - 1;
  const double w = (t - lo->first) / (hi->first - lo->first);
  return (1.0 - w) * lo->second + w * hi->second;
}

PiecewiseLinear PiecewiseLinear::parse(const std::string& text) {
  PiecewiseLinear p;
  for (const auto& item : split(text, ',')) {
    if (item.empty()) continue;
    const auto f = split(item, ':');
    if (f.size() != 2) throw ConfigError("table knot '" + item + "' must read time:value");
    try {
      p.knots.emplace_back(std::stod(f[0]), std::stod(f[1]));
    } catch (const std::exception&) {
      throw ConfigError("table knot '" + item + "' has a malformed number");
    }
  }
  if (p.knots.empty()) throw ConfigError("table has no knots");
  for (std::size_t i = 1; i < p.knots.size(); ++i)
    if (!(p.knots[i].first > p.knots[i - 1].first)) throw ConfigError("table times must increase strictly");
  return p;
}

std::string PiecewiseLinear::to_string() const {
  std::string out;
  for (const auto& [t, v] : knots) {
    if (!out.empty()) out += ',';
    out += fmt(t) + ':' + fmt(v);
  }
  return out;
}

double gaussian_pulse(double t, double amplitude, double t0, double width) {
  const double z = (t - t0) / width;
  return amplitude * std::exp(-0.5 * z * z);
}

void set_seed(CaseConfig& cfg, std::uint64_t seed) {
  cfg.seed = seed;
  cfg.train.seed = seed;
  cfg.upsample.seed = seed ^ kUpsampleSeedSalt;
}

void set_epochs(CaseConfig& cfg, int epochs) {
  if (epochs < 0) throw ConfigError("epoch count must be nonnegative");
  auto& s = cfg.train.schedule;
  if (epochs > cfg.train.total_epochs()) {
    if (s.empty()) throw ConfigError("cannot extend an empty schedule");
    s.back().end = epochs;
    return;
  }
  while (!s.empty() && s.back().begin >= epochs) s.pop_back();
  if (!s.empty()) s.back().end = epochs;
}

double CaseConfig::param(const std::string& key) const {
  const auto it = params.find(key);
  if (it == params.end()) throw ConfigError("case '" + name + "' has no parameter '" + key + "'");
  return it->second;
}

std::string CaseConfig::to_text() const {
  std::ostringstream out;
  out << "case = " << name << '\n';
  out << "nx = " << nx << "\nny = " << ny << "\nrefinements = " << refinements << '\n';
  out << "dt = " << fmt(dt) << "\nsteps = " << steps << '\n';
  out << "samples = ";
  for (std::size_t i = 0; i < samples.size(); ++i) out << (i ? "," : "") << samples[i];
  out << '\n';
  out << "np = " << train.np << '\n';
  out << "schedule = " << schedule_to_string(train.schedule) << '\n';
  out << "alpha = " << fmt(upsample.alpha) << '\n';
  out << "prior_spread = " << (upsample.spread == PriorSpread::StdDev ? "stddev" : "variance") << '\n';
  out << "relu = " << (train.relu ? "true" : "false") << '\n';
  out << "upsampling = " << (train.upsampling ? "true" : "false") << '\n';
  out << "seed = " << seed << '\n';
  out << "validation_bound = " << fmt(validation_bound) << '\n';
  for (const auto& [k, v] : params) out << k << " = " << fmt(v) << '\n';
  for (const auto& [k, v] : tables) out << k << " = " << v.to_string() << '\n';
  return out.str();
}

const std::vector<std::string>& case_names() {
  static const std::vector<std::string> names{"heat", "quadrupole", "cavity"};
  return names;
}

std::vector<int> heat_default_samples() {
  return {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 12, 15, 20, 25, 30, 50, 75, 100};
}

std::vector<int> quadrupole_default_samples(int steps) {
  std::set<int> s{0, 2, 4, steps};
  for (int k = 0; k <= steps; k += 8) s.insert(k);
  for (int centre : {100, 150, 180, 300})
    for (int d = -10; d <= 10; d += 2)
      if (centre + d >= 0 && centre + d <= steps) s.insert(centre + d);
  return {s.begin(), s.end()};
}

CaseConfig default_case_config(const std::string& name) {
  CaseConfig c;
  c.name = name;
  c.train.relu = true;
  c.train.upsampling = true;
  c.validation_bound = 1.0;
  if (name == "heat") {
    c.nx = c.ny = 14;
    c.dt = 2e-2;
    c.steps = 100;
    c.samples = heat_default_samples();
    c.train.np = 2;
    c.train.schedule = two_phase_schedule();
    c.upsample.alpha = 1.0 / 25.0;
    c.params = {{"half_width", 8.0},        {"base_height", 2.0 / 7.0}, {"base_half_width", 5.0 / 7.0},
                {"fin_width", 2.0 / 7.0},   {"fin_height", 8.0 / 7.0},  {"fin_pitch", 4.0 / 7.0},
                {"kappa_fin", 50.0},        {"kappa_air", 0.5},         {"rho_cv", 1.0},
                {"base_temperature", 10.0}, {"defect", 0.25},           {"defect_fraction", 0.25}};
  } else if (name == "quadrupole") {
    c.nx = c.ny = 20;
    c.dt = 1e-2;
    c.steps = 327;
    c.samples = quadrupole_default_samples(c.steps);
    c.train.np = 2;
    c.train.schedule = two_phase_schedule();
    c.upsample.alpha = 1.0 / 25.0;
    c.params = {{"radius", 0.05},       {"yoke_inner", 0.025},     {"yoke_outer", 0.045},
                {"coil_center", 0.015}, {"coil_half_width", 0.005}, {"aperture_radius", 0.008},
                {"sigma_fe", 1.04e7},   {"nu_fe_relative", 2e-3},   {"sigma_air", 1.0},
                {"peak_current", 1000.0}};
    c.tables["current_hifi"] = PiecewiseLinear{{{0.0, 0.0}, {1.0, 1.0}, {1.8, 1.0}, {3.0, 0.0}, {3.27, 0.0}}};
    c.tables["current_lofi"] = PiecewiseLinear{{{0.0, 0.0}, {1.5, 1.0}, {3.0, 0.0}, {3.27, 0.0}}};
  } else if (name == "cavity") {
    c.nx = 20;
    c.ny = 12;
    c.dt = 4e-5;
    c.steps = 100;
    for (int k = 0; k <= c.steps; k += 2) c.samples.push_back(k);
    c.train.np = 3;
    c.train.schedule = {{0, 1000, 1e-3, false}, {1000, 2000, 5e-4, false}, {2000, 2500, 1e-4, true}};
    c.upsample.alpha = 1.0 / 100.0;
    c.params = {{"length", 1.5},          {"height", 0.9},         {"connector_length", 0.3},
                {"connector_low", 0.3},   {"connector_high", 0.6}, {"fillet_radius", 0.15},
                {"wave_speed", 343.0},    {"source_x", 0.18},      {"source_y", 0.42},
                {"pulse_amplitude", 1.0}, {"pulse_center", 5e-4},  {"pulse_width", 1e-4}};
  } else {
    std::string valid;
    for (const auto& n : case_names()) valid += (valid.empty() ? "" : ", ") + n;
    throw ConfigError("unknown case '" + name + "' (valid: " + valid + ")");
  }
  set_seed(c, 42);
  return c;
}

CaseConfig case_config_from(const Config& cfg, const std::string& fallback_case) {
  const std::string name = cfg.has("case") ? cfg.get_string("case") : fallback_case;
  if (name.empty()) throw ConfigError("no case selected");
  CaseConfig c = default_case_config(name);
  for (const auto& key : cfg.keys()) {
    if (key == "case") continue;
    if (key == "nx") {
      c.nx = static_cast<int>(cfg.get_int(key));
    } else if (key == "ny") {
      c.ny = static_cast<int>(cfg.get_int(key));
    } else if (key == "refinements") {
      c.refinements = static_cast<int>(cfg.get_int(key));
    } else if (key == "dt") {
      c.dt = cfg.get_double(key);
    } else if (key == "steps") {
      c.steps = static_cast<int>(cfg.get_int(key));
    } else if (key == "samples") {
      c.samples.clear();
      for (long long v : cfg.get_int_list(key)) c.samples.push_back(static_cast<int>(v));
    } else if (key == "np") {
      c.train.np = static_cast<int>(cfg.get_int(key));
    } else if (key == "schedule") {
      c.train.schedule = parse_schedule(cfg.get_string(key));
    } else if (key == "epochs") {
      set_epochs(c, static_cast<int>(cfg.get_int(key)));
    } else if (key == "alpha") {
      c.upsample.alpha = cfg.get_double(key);
    } else if (key == "prior_spread") {
      const std::string v = cfg.get_string(key);
      if (v == "stddev") {
        c.upsample.spread = PriorSpread::StdDev;
      } else if (v == "variance") {
        c.upsample.spread = PriorSpread::Variance;
      } else {
        throw ConfigError("key 'prior_spread' must be stddev or variance");
      }
    } else if (key == "relu") {
      c.train.relu = cfg.get_bool(key);
    } else if (key == "upsampling") {
      c.train.upsampling = cfg.get_bool(key);
    } else if (key == "seed") {
      set_seed(c, static_cast<std::uint64_t>(cfg.get_int(key)));
    } else if (key == "validation_bound") {
      c.validation_bound = cfg.get_double(key);
    } else if (c.params.count(key)) {
      c.params[key] = cfg.get_double(key);
    } else if (c.tables.count(key)) {
      c.tables[key] = PiecewiseLinear::parse(cfg.get_string(key));
    } else {
      throw ConfigError("unknown key '" + key + "' for case '" + name + "'");
    }
  }
  c.train.validate();
  c.upsample.validate();
  if (c.nx < 1 || c.ny < 1) throw ConfigError("nx and ny must be positive");
  if (!(c.validation_bound > 0.0)) throw ConfigError("validation_bound must be positive");
  TimeGrid(0.0, c.dt, c.steps);
  c.samples = normalize_samples(c.samples, c.steps);
  return c;
}

double heat_sink_kappa(const CaseConfig& cfg, Fidelity fidelity, const Point& p) {
  const HeatGeometry g(cfg);
  if (!g.in_conductor(p)) return cfg.param("kappa_air");
  double k = cfg.param("kappa_fin");
  if (fidelity == Fidelity::Hifi && g.fin_index(p) >= 0) {
    const double zone = cfg.param("defect_fraction") * g.fin_height;
    const double start = g.fin_top() - zone;
    if (p.y > start) k *= 1.0 - cfg.param("defect") * std::min(1.0, (p.y - start) / zone);
  }
  return k;
}

ProblemSetup build_heat_sink(Fidelity fidelity, const CaseConfig& cfg) {
  const HeatGeometry g(cfg);
  if (!(g.l > 0.0)) throw InvalidGeometry("heat sink half width must be positive");
  const RegionFn region_fn = [g](const Point& p) { return g.in_conductor(p) ? region::kConductor : region::kAir; };
  const BoundaryFn boundary_fn = [g](const Point& p) {
    return (std::abs(p.y + g.l) < 1e-9 * g.l && std::abs(p.x) <= g.base_half + 1e-9 * g.l) ? 2 : 1;
  };
  const TriMesh coarse = generate_structured_rect(cfg.nx, cfg.ny, Rect{-g.l, -g.l, g.l, g.l}, region_fn, boundary_fn);
  {
    std::vector<int> hits(3, 0);
    for (int t = 0; t < coarse.num_triangles(); ++t) {
      const int fin = g.fin_index(coarse.centroid(t));
      if (fin >= 0 && !g.in_base(coarse.centroid(t))) ++hits[fin];
    }
    for (int i = 0; i < 3; ++i)
      if (hits[i] == 0) throw InvalidGeometry("resolution too coarse to contain fin " + std::to_string(i));
  }
  ProblemSetup s;
  s.case_name = "heat";
  s.fidelity = fidelity;
  s.mesh = refined(coarse, checked_refinements(cfg, fidelity), region_fn, boundary_fn);
  s.kind = PdeKind::FirstOrder;
  const double rho = cfg.param("rho_cv");
  s.mass_coeff = [rho](const Point&) { return rho; };
  s.stiffness_coeff = [cfg, fidelity](const Point& p) { return heat_sink_kappa(cfg, fidelity, p); };
  s.dirichlet = {{1, 0.0}, {2, cfg.param("base_temperature")}};
  s.grid = cfg.grid();
  return s;
}

ProblemSetup build_quadrupole(Fidelity fidelity, const CaseConfig& cfg) {
  const QuadGeometry g(cfg);
  if (!(g.radius > g.yoke_outer && g.yoke_outer > g.yoke_inner && g.yoke_inner > 0.0))
    throw InvalidGeometry("quadrupole radii must satisfy 0 < yoke_inner < yoke_outer < radius");
  const RegionFn region_fn = [g](const Point& p) { return g.region(p); };
  const TriMesh square = generate_structured_rect(cfg.nx, cfg.ny, Rect{-g.radius, -g.radius, g.radius, g.radius},
                                                  region_fn);
  const double r = g.radius;
  const TriMesh coarse = extract_triangles(
      square, [r](const Point& c, int) { return std::hypot(c.x, c.y) < r; }, {});
  require_region(coarse, region::kYoke, "yoke");
  for (int i = 0; i < 4; ++i) require_region(coarse, region::kCoilFirst + i, "coil " + std::to_string(i));

  ProblemSetup s;
  s.case_name = "quadrupole";
  s.fidelity = fidelity;
  s.mesh = refined(coarse, checked_refinements(cfg, fidelity), region_fn, {});
  s.kind = PdeKind::FirstOrder;
  const double nu0 = 1.0 / (4.0 * std::numbers::pi * 1e-7);
  const double sigma_fe = cfg.param("sigma_fe");
  const double sigma_air = cfg.param("sigma_air");
  const double nu_fe = cfg.param("nu_fe_relative") * nu0;
  s.mass_coeff = [g, sigma_fe, sigma_air](const Point& p) {
    return g.region(p) == region::kYoke ? sigma_fe : sigma_air;
  };
  s.stiffness_coeff = [g, nu_fe, nu0](const Point& p) { return g.region(p) == region::kYoke ? nu_fe : nu0; };
  std::array<double, 4> inv_area{};
  for (int i = 0; i < 4; ++i) inv_area[i] = 1.0 / s.mesh->region_area(region::kCoilFirst + i);
  const PiecewiseLinear current = cfg.tables.at(fidelity == Fidelity::Hifi ? "current_hifi" : "current_lofi");
  const double peak = cfg.param("peak_current");
  s.source = [g, inv_area, current, peak](const Point& p, double t) {
    const int coil = g.coil_index(p);
    if (coil < 0 || g.region(p) != region::kCoilFirst + coil) return 0.0;
    const double sign = coil % 2 == 0 ? 1.0 : -1.0;
    return sign * peak * current(t) * inv_area[coil];
  };
  s.dirichlet = {{1, 0.0}};
  s.grid = cfg.grid();
  return s;
}

ProblemSetup build_cavity(Fidelity fidelity, const CaseConfig& cfg) {
  const CavityGeometry g(cfg);
  if (!(g.connector_length > 0.0 && 2 * g.connector_length < g.length && g.connector_low > 0.0 &&
        g.connector_high > g.connector_low && g.connector_high < g.height))
    throw InvalidGeometry("cavity dimensions are inconsistent");
  const RegionFn region_fn = [g, fidelity](const Point& p) { return g.is_wall(p, fidelity) ? region::kWall : region::kAir; };
  const RegionFn coarse_fn = [g](const Point& p) { return g.is_wall(p, Fidelity::Lofi) ? region::kWall : region::kAir; };
  const TriMesh coarse = generate_structured_rect(cfg.nx, cfg.ny, Rect{0.0, 0.0, g.length, g.height}, coarse_fn);
  const Point src{cfg.param("source_x"), cfg.param("source_y")};
  if (src.x <= 0.0 || src.x >= g.length || src.y <= 0.0 || src.y >= g.height || g.is_wall(src, Fidelity::Lofi))
    throw InvalidGeometry("source point lies outside the cavity");
  {
    const PointLocation loc = coarse.locate(src);
    if (coarse.region_tags()[loc.triangle] != region::kAir)
      throw InvalidGeometry("source point falls in a wall triangle at this resolution");
  }
  require_region(coarse, region::kWall, "connector walls");

  ProblemSetup s;
  s.case_name = "cavity";
  s.fidelity = fidelity;
  s.mesh = refined(coarse, checked_refinements(cfg, fidelity), region_fn, {});
  s.kind = PdeKind::SecondOrder;
  s.wave_speed = cfg.param("wave_speed");
  const double a = cfg.param("pulse_amplitude");
  const double t0 = cfg.param("pulse_center");
  const double w = cfg.param("pulse_width");
  if (!(w > 0.0)) throw ConfigError("pulse_width must be positive");
  s.point_sources.push_back({src, [a, t0, w](double t) { return gaussian_pulse(t, a, t0, w); }});
  s.dirichlet = {{1, 0.0}};
  s.region_constraints = {{region::kWall, 0.0}};
  s.grid = cfg.grid();
  return s;
}

ProblemSetup build_case(const CaseConfig& cfg, Fidelity fidelity) {
  if (cfg.name == "heat") return build_heat_sink(fidelity, cfg);
  if (cfg.name == "quadrupole") return build_quadrupole(fidelity, cfg);
  if (cfg.name == "cavity") return build_cavity(fidelity, cfg);
  return build_case(default_case_config(cfg.name), fidelity);
}

FidelityPair build_pair(const CaseConfig& cfg) {
  FidelityPair pair{build_case(cfg, Fidelity::Lofi), build_case(cfg, Fidelity::Hifi),
                    normalize_samples(cfg.samples, cfg.steps)};
  pair.validate();
  return pair;
}

}  // namespace dforge
