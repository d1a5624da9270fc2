// Acceptance run: prints one PASS/FAIL line per criterion and exits nonzero
// when any criterion fails. All tolerances are fixed below.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "dforge/cases.hpp"
#include "dforge/hybrid.hpp"
#include "dforge/pipeline.hpp"

namespace fs = std::filesystem;
using namespace dforge;

namespace {

constexpr double kPi = std::numbers::pi;

// Criterion 2
constexpr double kGradAbsTol = 1e-5;
constexpr double kGradRelTol = 1e-4;
constexpr double kFdStep = 1e-5;
// Criterion 3
constexpr double kElementTol = 1e-14;
constexpr double kMinSpatialOrder = 1.8;
// Criterion 4
constexpr double kProjectionTol = 1e-10;
// Criterion 5
constexpr double kMinUpsamplingGain = 3.0;
constexpr double kMaxUpsampledError = 0.10;
// Criterion 6
constexpr double kMinCorrectionGain = 10.0;
// Criterion 7
constexpr double kOracleTol = 1e-12;
// Criterion 9
constexpr double kPriorStdRelTol = 0.05;
constexpr int kPriorDraws = 100000;
// Criterion 10
constexpr double kMaxBetaResidualIncrease = 0.10;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& title, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.pass) ++failures;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f s", secs);
  std::cout << "criterion " << id << " " << (o.pass ? "PASS" : "FAIL") << " " << title << ": " << o.detail << " ("
            << buf << ")" << std::endl;
}

std::string num(double v, const char* f = "%.4g") {
  char buf[40];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string pct(double v) { return num(100.0 * v, "%.3g") + "%"; }

Matrix random_matrix(int r, int c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Matrix m(r, c);
  for (int i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

// ---------------------------------------------------------------- 1

Outcome parameter_counts() {
  const std::int64_t a = param_count(278, 2), b = param_count(895, 2), c = param_count(169, 3);
  return {a == 1316330 && b == 13625480 && c == 716222,
          std::to_string(a) + ", " + std::to_string(b) + ", " + std::to_string(c)};
}

// ---------------------------------------------------------------- 2

Outcome gradient_oracle() {
  int checked = 0, bad = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const int n = 2 + static_cast<int>(seed % 3);
    const int np = 1 + static_cast<int>(seed % 3);
    RnnModel m(n, np, seed % 2 == 1);
    std::mt19937_64 rng(seed);
    m.params() = random_matrix(static_cast<int>(m.size()), 1, rng, 0.5);
    const int instants = 2 * np + 1;
    const Matrix inputs = random_matrix(n, instants, rng);
    LossTargets t;
    for (int k = 0; k < instants; k += 2) t.samples.push_back(k);
    t.targets = random_matrix(n, static_cast<int>(t.samples.size()), rng);
    for (std::size_t j = 0; j < t.samples.size(); ++j) t.beta.push_back(1.0 + 0.5 * static_cast<double>(j));
    for (int k = 1; k < instants; k += 2) t.up_indices.push_back(k);
    t.up_states = random_matrix(n, static_cast<int>(t.up_indices.size()), rng);
    const LossGradient lg = loss_and_gradient(m, inputs, t);
    for (std::int64_t k = 0; k < m.size(); ++k) {
      RnnModel a = m, b = m;
      a.params()[k] += kFdStep;
      b.params()[k] -= kFdStep;
      const double fd =
          (weighted_loss(predict_sequence(a, inputs), t) - weighted_loss(predict_sequence(b, inputs), t)) /
          (2 * kFdStep);
      const double err = std::abs(lg.gradient[k] - fd);
      worst = std::max(worst, err / std::max(kGradAbsTol, kGradRelTol * std::abs(fd)));
      if (err > std::max(kGradAbsTol, kGradRelTol * std::abs(fd))) ++bad;
      ++checked;
    }
  }
  return {bad == 0, std::to_string(checked) + " components over 5 seeds, " + std::to_string(bad) +
                        " outside tolerance, worst error/tolerance " + num(worst)};
}

// ---------------------------------------------------------------- 3

Outcome fe_correctness() {
  const TriMesh tri({{0, 0}, {1, 0}, {0, 1}}, {{0, 1, 2}}, {1}, {0, 0, 0});
  Matrix me(3, 3), ae(3, 3);
  me << 2, 1, 1, 1, 2, 1, 1, 1, 2;
  me /= 24.0;
  ae << 2, -1, -1, -1, 1, 0, -1, 0, 1;
  ae /= 2.0;
  const double dm = (Matrix(assemble_mass(tri)) - me).cwiseAbs().maxCoeff();
  const double da = (Matrix(assemble_stiffness(tri, [](const Point&) { return 1.0; })) - ae).cwiseAbs().maxCoeff();

  // u = (1 + t) sin(pi x) sin(pi y) on the unit square.
  const auto exact = [](const Point& p, double t) { return (1.0 + t) * std::sin(kPi * p.x) * std::sin(kPi * p.y); };
  const SourceFn source = [](const Point& p, double t) {
    return std::sin(kPi * p.x) * std::sin(kPi * p.y) * (1.0 + 2.0 * kPi * kPi * (1.0 + t));
  };
  const TimeGrid grid(0.0, 0.01, 20);
  std::vector<double> errors;
  TriMesh mesh = generate_structured_rect(4, 4, Rect{0.0, 0.0, 1.0, 1.0}, {}, [](const Point&) { return 1; });
  for (int level = 0; level < 4; ++level) {
    if (level > 0) mesh = refine_uniform(mesh);
    const auto ptr = std::make_shared<const TriMesh>(mesh);
    const Vector u0 = interpolate(mesh, [&](const Point& p) { return exact(p, 0.0); });
    const LoadFn load = [&](double t) { return assemble_load(mesh, source, t); };
    const Trajectory tr =
        implicit_euler_run(assemble_mass(mesh), assemble_stiffness(mesh, [](const Point&) { return 1.0; }), load,
                           DirichletData::homogeneous(mesh.boundary_nodes()), u0, grid, ptr);
    const FeField uh(ptr, tr.state(grid.steps));
    const TriMesh fine = refine_uniform(refine_uniform(mesh));
    double err2 = 0.0;
    for (int t = 0; t < fine.num_triangles(); ++t) {
      const Triangle& tt = fine.triangle(t);
      for (int e = 0; e < 3; ++e) {
        const Point& a = fine.node(tt[e]);
        const Point& b = fine.node(tt[(e + 1) % 3]);
        const Point q{0.5 * (a.x + b.x), 0.5 * (a.y + b.y)};
        const double d = eval_field(uh, q) - exact(q, grid.final_time());
        err2 += fine.triangle_area(t) / 3.0 * d * d;
      }
    }
    errors.push_back(std::sqrt(err2));
  }
  bool orders_ok = true;
  std::string orders;
  for (std::size_t i = 1; i < errors.size(); ++i) {
    const double o = std::log2(errors[i - 1] / errors[i]);
    orders_ok = orders_ok && o >= kMinSpatialOrder;
    orders += (i > 1 ? ", " : "") + num(o, "%.3f");
  }
  return {dm <= kElementTol && da <= kElementTol && orders_ok,
          "element mass deviation " + num(dm) + ", stiffness deviation " + num(da) + ", observed orders " + orders};
}

// ---------------------------------------------------------------- 4

Outcome projection_optimality() {
  const auto lofi = std::make_shared<const TriMesh>(generate_structured_rect(5, 4, Rect{0.0, 0.0, 1.5, 1.0}));
  const auto hifi = std::make_shared<const TriMesh>(refine_uniform(*lofi));
  const Projector proj(lofi, hifi);
  const MassNorm hnorm(*hifi);
  std::mt19937_64 rng(4);
  const auto prolong = [&](const Vector& c) {
    const FeField f(lofi, c);
    Vector out(hifi->num_nodes());
    for (int i = 0; i < hifi->num_nodes(); ++i) out[i] = eval_field(f, hifi->node(i));
    return out;
  };
  double exact_err = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const Vector c = random_matrix(lofi->num_nodes(), 1, rng);
    exact_err = std::max(exact_err, (proj.project(prolong(c)) - c).cwiseAbs().maxCoeff());
  }
  int losses = 0;
  for (int f = 0; f < 20; ++f) {
    const Vector x = random_matrix(hifi->num_nodes(), 1, rng);
    const double best = hnorm(Vector(x - prolong(proj.project(x))));
    for (int w = 0; w < 20; ++w) {
      const Vector cand = random_matrix(lofi->num_nodes(), 1, rng);
      if (hnorm(Vector(x - prolong(cand))) < best) ++losses;
    }
  }
  return {exact_err <= kProjectionTol && losses == 0,
          "max coefficient error " + num(exact_err) + " on coarse fields, " + std::to_string(losses) +
              " of 400 random competitors closer"};
}

// ------------------------------------------------------------- 5, 6, 10

double sampled_residual(const HybridModel& model, const DiscrepancyDataset& d) {
  const Trajectory pred = predict_discrepancy(model, d.lofi);
  const MassNorm norm(*d.mesh);
  double r = 0.0;
  for (std::size_t j = 0; j < d.samples.size(); ++j)
    r += norm(Vector(d.snapshots.col(static_cast<Eigen::Index>(j)) - pred.state(d.samples[j])));
  return r;
}

struct HeatRuns {
  CaseData data;
  HybridTraining with_up, without_up, beta_off;
  MetricsReport m_with, m_without;
};

HeatRuns run_heat() {
  HeatRuns h;
  const CaseConfig cfg = default_case_config("heat");
  h.data = prepare_case(cfg);
  const DiscrepancyDataset& d = h.data.dataset;
  h.with_up = train_hybrid(d, cfg.train, cfg.upsample, &h.data.reference);
  TrainConfig no_up = cfg.train;
  no_up.upsampling = false;
  h.without_up = train_hybrid(d, no_up, cfg.upsample, &h.data.reference);
  TrainConfig off = cfg.train;
  for (auto& s : off.schedule) s.beta = false;
  h.beta_off = train_hybrid(d, off, cfg.upsample, &h.data.reference);
  h.m_with = evaluate_hybrid(h.with_up.model, h.data.lofi, h.data.reference, cfg.validation_bound);
  h.m_without = evaluate_hybrid(h.without_up.model, h.data.lofi, h.data.reference, cfg.validation_bound);
  return h;
}

Outcome upsampling_trend(const HeatRuns& h) {
  const double a = h.m_with.delta_l2_discrepancy, b = h.m_without.delta_l2_discrepancy;
  const bool diverged = h.with_up.result.diverged || h.without_up.result.diverged;
  const auto& d = h.data.dataset;
  return {!diverged && b >= kMinUpsamplingGain * a && a < kMaxUpsampledError,
          std::to_string(d.num_dofs()) + " lofi dofs, " + std::to_string(d.samples.size()) + " of " +
              std::to_string(d.grid().num_instants()) + " instants sampled; with upsampling " + pct(a) +
              ", without " + pct(b) + ", ratio " + num(b / a, "%.2f")};
}

Outcome correction_case(const std::string& name, const MetricsReport& m, bool diverged) {
  const double gain = m.delta_l2_lofi / m.delta_l2_corrected;
  return {!diverged && gain >= kMinCorrectionGain,
          name + " lofi " + pct(m.delta_l2_lofi) + " -> corrected " + pct(m.delta_l2_corrected) + " (" +
              num(gain, "%.1f") + "x)"};
}

Outcome beta_mechanism(const HeatRuns& h) {
  bool ge1 = true;
  for (double b : h.with_up.result.beta) ge1 = ge1 && b >= 1.0;
  const Matrix& t = h.data.dataset.snapshots;
  const MassNorm norm(*h.data.dataset.mesh);
  bool perfect = true;
  for (double b : update_beta(t, t, norm)) perfect = perfect && b == 1.0;
  const double on = sampled_residual(h.with_up.model, h.data.dataset);
  const double off = sampled_residual(h.beta_off.model, h.data.dataset);
  const double rel = on / off - 1.0;
  return {ge1 && perfect && rel <= kMaxBetaResidualIncrease && !h.beta_off.result.diverged,
          std::string("beta >= 1: ") + (ge1 ? "yes" : "no") + ", beta = 1 at perfect fit: " +
              (perfect ? "yes" : "no") + ", sampled residual beta-on " + num(on) + " vs beta-off " + num(off) +
              " (" + (rel >= 0 ? "+" : "") + pct(rel) + ")"};
}

Outcome correction_other(const std::string& name) {
  const CaseConfig cfg = default_case_config(name);
  const CaseData d = prepare_case(cfg);
  const HybridTraining t = train_hybrid(d.dataset, cfg.train, cfg.upsample, &d.reference);
  return correction_case(name, evaluate_hybrid(t.model, d.lofi, d.reference, cfg.validation_bound),
                         t.result.diverged);
}

// ---------------------------------------------------------------- 7

Outcome oracle_identity(const CaseData& d) {
  const Trajectory projected = d.projector->project(d.hifi);
  Matrix oracle = Matrix::Zero(d.lofi.num_dofs(), d.lofi.num_instants());
  for (std::size_t j = 0; j < d.dataset.samples.size(); ++j)
    oracle.col(d.dataset.samples[j]) = d.dataset.snapshots.col(static_cast<Eigen::Index>(j));
  const Trajectory corrected = bias_correct(d.lofi, Trajectory(d.lofi.grid, oracle, d.lofi.mesh));
  double worst = 0.0;
  for (int k : d.dataset.samples)
    worst = std::max(worst, (corrected.state(k) - projected.state(k)).cwiseAbs().maxCoeff());
  return {worst <= kOracleTol, "max deviation " + num(worst) + " over " + std::to_string(d.dataset.samples.size()) +
                                   " sampled instants"};
}

// ---------------------------------------------------------------- 8

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + DFORGE_CLI_PATH + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string comparable(const fs::path& p) {
  if (p.filename() != "manifest.json") return slurp(p);
  nlohmann::ordered_json j = nlohmann::ordered_json::parse(slurp(p));
  j.erase("timestamps");
  return j.dump();
}

bool pipeline(const fs::path& root) {
  fs::remove_all(root);
  const auto q = [](const fs::path& p) { return "\"" + p.string() + "\""; };
  const fs::path ds = root / "dataset", tr = root / "train", co = root / "correct", ev = root / "evaluate";
  return run_cli("dataset --case heat --seed 7 --out " + q(ds)) == 0 &&
         run_cli("train --dataset " + q(ds) + " --epochs 50 --out " + q(tr)) == 0 &&
         run_cli("correct --dataset " + q(ds) + " --checkpoint " + q(tr / "checkpoint.txt") + " --out " + q(co)) ==
             0 &&
         run_cli("evaluate --dataset " + q(ds) + " --checkpoint " + q(tr / "checkpoint.txt") + " --out " + q(ev)) ==
             0;
}

Outcome determinism() {
  const fs::path base = fs::temp_directory_path() / "dforge_acceptance";
  const fs::path a = base / "run_a", b = base / "run_b";
  if (!pipeline(a) || !pipeline(b)) return {false, "pipeline command failed"};
  int files = 0, differing = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), a);
    ++files;
    if (!fs::exists(b / rel) || comparable(e.path()) != comparable(b / rel)) ++differing;
  }
  int files_b = 0;
  for (const auto& e : fs::recursive_directory_iterator(b)) files_b += e.is_regular_file() ? 1 : 0;
  fs::remove_all(base);
  return {differing == 0 && files == files_b && files > 0,
          std::to_string(files) + " artifacts compared (manifest timestamps excluded), " + std::to_string(differing) +
              " differ"};
}

// ---------------------------------------------------------------- 9

Outcome upsampling_statistics() {
  struct Probe {
    double alpha, mean;
  };
  std::string detail;
  bool ok = true;
  for (const Probe p : {Probe{1.0 / 25.0, 1.0}, Probe{0.1, -3.0}}) {
    Rng rng = substream(99, 0, static_cast<std::uint64_t>(p.alpha * 1000));
    const Vector m = Vector::Constant(1, p.mean);
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < kPriorDraws; ++i) {
      const double e = sample_prior(m, p.alpha, rng)[0] - p.mean;
      s += e;
      s2 += e * e;
    }
    const double mu = s / kPriorDraws;
    const double sd = std::sqrt(s2 / kPriorDraws - mu * mu);
    const double target = p.alpha * std::abs(p.mean);
    ok = ok && std::abs(sd - target) <= kPriorStdRelTol * target;
    detail += "std " + num(sd) + " vs " + num(target) + "; ";
  }
  Matrix snaps(3, 2);
  snaps << 0.0, 1.0, 2.0, -1.0, 0.5, 0.0;
  const TimeGrid grid(0.0, 0.1, 6);
  const UpsampledEpoch a = build_upsampled_epoch(grid, {0, 6}, snaps, {1, 2, 3, 4, 5}, UpsampleConfig{0.0, 1}, 0);
  const UpsampledEpoch b = build_upsampled_epoch(grid, {0, 6}, snaps, {1, 2, 3, 4, 5}, UpsampleConfig{0.0, 2}, 9);
  Rng r1 = substream(5, 0, 0);
  const Vector v = Vector::LinSpaced(4, -1.0, 2.0);
  const bool det = (a.states - b.states).cwiseAbs().maxCoeff() == 0.0 && (sample_prior(v, 0.0, r1) - v).norm() == 0.0;
  detail += std::string("alpha = 0 deterministic: ") + (det ? "yes" : "no");
  return {ok && det, detail};
}

}  // namespace

int main() {
  std::cout << "acceptance run" << std::endl;
  report(1, "parameter counts", parameter_counts);
  report(2, "gradient oracle", gradient_oracle);
  report(3, "FE correctness", fe_correctness);
  report(4, "projection optimality", projection_optimality);

  std::optional<HeatRuns> heat;
  const auto heat_runs = [&]() -> const HeatRuns& {
    if (!heat) heat = run_heat();
    return *heat;
  };
  report(5, "upsampling vs overfitting (heat)", [&] { return upsampling_trend(heat_runs()); });
  report(6, "bias-correction improvement", [&] {
    const Outcome h = correction_case("heat", heat_runs().m_with, heat_runs().with_up.result.diverged);
    const Outcome q = correction_other("quadrupole");
    const Outcome c = correction_other("cavity");
    return Outcome{h.pass && q.pass && c.pass, h.detail + "; " + q.detail + "; " + c.detail};
  });
  report(7, "oracle correction identity", [&] { return oracle_identity(heat_runs().data); });
  report(8, "CLI determinism", determinism);
  report(9, "upsampling statistics", upsampling_statistics);
  report(10, "beta mechanism", [&] { return beta_mechanism(heat_runs()); });

  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
