#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "dforge/error.hpp"
#include "dforge/hybrid.hpp"

using namespace dforge;

namespace {

const Rect kUnit{0.0, 0.0, 1.0, 1.0};

Matrix random_matrix(int r, int c, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Matrix m(r, c);
  for (int i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

struct Pair {
  MeshPtr lofi, hifi;
  TimeGrid grid{0.0, 0.1, 6};
  Trajectory xl, xh;
};

Pair random_pair(std::uint64_t seed) {
  Pair p;
  p.lofi = std::make_shared<const TriMesh>(generate_structured_rect(3, 3, kUnit));
  p.hifi = std::make_shared<const TriMesh>(refine_uniform(*p.lofi));
  std::mt19937_64 rng(seed);
  p.xl = Trajectory(p.grid, random_matrix(p.lofi->num_nodes(), 7, rng), p.lofi);
  p.xh = Trajectory(p.grid, random_matrix(p.hifi->num_nodes(), 7, rng), p.hifi);
  return p;
}

}  // namespace

TEST_CASE("discrepancy metric examples") {
  const Pair p = random_pair(1);
  const MassNorm norm(*p.lofi);
  const Trajectory& ref = p.xl;
  CHECK(relative_l2_error_discrepancy(ref, ref, norm) == 0.0);
  CHECK(relative_l2_error_discrepancy(Trajectory(p.grid, 2.0 * ref.states, p.lofi), ref, norm) ==
        doctest::Approx(1.0).epsilon(1e-14));
  CHECK(relative_l2_error_discrepancy(Trajectory(p.grid, Matrix::Zero(ref.num_dofs(), 7), p.lofi), ref, *p.lofi) ==
        doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS(relative_l2_error_discrepancy(ref, Trajectory(p.grid, Matrix::Zero(ref.num_dofs(), 7), p.lofi), norm),
                  UndefinedMetric);
  CHECK_THROWS_AS(
      relative_l2_error_discrepancy(ref, Trajectory(TimeGrid(0.0, 0.2, 6), ref.states, p.lofi), norm), ConfigError);
}

TEST_CASE("Riemann sums use left endpoints") {
  // Three steps on the unit square with spatially constant fields, so each
  // mass norm is the absolute value of the constant.
  const MeshPtr m = std::make_shared<const TriMesh>(generate_structured_rect(2, 2, kUnit));
  const int n = m->num_nodes();
  const TimeGrid grid(0.0, 0.5, 3);
  Matrix ref(n, 4), pred(n, 4);
  const double r[4] = {1.0, 2.0, 4.0, 100.0};
  const double q[4] = {1.5, 1.0, 4.0, -50.0};
  for (int k = 0; k < 4; ++k) {
    ref.col(k).setConstant(r[k]);
    pred.col(k).setConstant(q[k]);
  }
  // (0.5 + 1 + 0) dt / (1 + 2 + 4) dt; the last instant is excluded.
  CHECK(relative_l2_error_discrepancy(Trajectory(grid, pred, m), Trajectory(grid, ref, m), *m) ==
        doctest::Approx(1.5 / 7.0).epsilon(1e-14));
}

TEST_CASE("state metric") {
  const Pair p = random_pair(2);
  const Projector proj(p.lofi, p.hifi);
  const Trajectory projected = proj.project(p.xh);
  CHECK(relative_l2_error_state(projected, p.xh, proj) <= 1e-14);
  const double e = relative_l2_error_state(p.xl, p.xh, proj);
  CHECK(e > 0.0);
  const Trajectory xl3(p.grid, 3.0 * p.xl.states, p.lofi);
  const Trajectory xh3(p.grid, 3.0 * p.xh.states, p.hifi);
  CHECK(relative_l2_error_state(xl3, xh3, proj) == doctest::Approx(e).epsilon(1e-13));

  // Scaling only the candidate's deviation scales the metric.
  const Trajectory moved(p.grid, projected.states + 2.0 * (p.xl.states - projected.states), p.lofi);
  CHECK(relative_l2_error_state(moved, p.xh, proj) == doctest::Approx(2.0 * e).epsilon(1e-13));
}

TEST_CASE("bias correction") {
  const Pair p = random_pair(3);
  const Projector proj(p.lofi, p.hifi);
  const Trajectory zero(p.grid, Matrix::Zero(p.lofi->num_nodes(), 7), p.lofi);
  CHECK((bias_correct(p.xl, zero).states - p.xl.states).cwiseAbs().maxCoeff() == 0.0);

  const DiscrepancyDataset d = build_discrepancy_dataset(proj, p.xl, p.xh, {0, 2, 5, 6});
  const Trajectory projected = proj.project(p.xh);
  Matrix oracle = Matrix::Zero(p.lofi->num_nodes(), 7);
  for (std::size_t j = 0; j < d.samples.size(); ++j) oracle.col(d.samples[j]) = d.snapshots.col(j);
  const Trajectory corrected = bias_correct(p.xl, Trajectory(p.grid, oracle, p.lofi));
  for (int k : d.samples) CHECK((corrected.state(k) - projected.state(k)).cwiseAbs().maxCoeff() <= 1e-12);

  const Trajectory delta(p.grid, oracle, p.lofi);
  const Trajectory twice = bias_correct(bias_correct(p.xl, delta), delta);
  CHECK((twice.states - (p.xl.states + 2.0 * oracle)).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK_THROWS_AS(bias_correct(p.xl, Trajectory(TimeGrid(0.0, 0.2, 6), oracle, p.lofi)), ConfigError);
}

TEST_CASE("corrected error factors into discrepancy error times lofi error") {
  // x_corr - T(x_hifi) = delta_theta - delta, so the corrected metric equals
  // the discrepancy metric times the lofi metric.
  for (std::uint64_t seed : {4, 5, 6}) {
    const Pair p = random_pair(seed);
    const Projector proj(p.lofi, p.hifi);
    const MassNorm norm(proj.lofi_mass());
    const Trajectory delta = dense_discrepancy(proj, p.xl, p.xh);
    std::mt19937_64 rng(seed + 10);
    const Trajectory pred(p.grid, delta.states + 0.3 * random_matrix(p.lofi->num_nodes(), 7, rng), p.lofi);
    const double d_delta = relative_l2_error_discrepancy(pred, delta, norm);
    const double d_lofi = relative_l2_error_state(p.xl, p.xh, proj);
    const double d_corr = relative_l2_error_state(bias_correct(p.xl, pred), p.xh, proj);
    CHECK(d_corr == doctest::Approx(d_delta * d_lofi).epsilon(1e-12));
    CHECK(d_corr <= d_lofi + d_delta * d_lofi + 1e-15);
  }
}

TEST_CASE("network scales and training data") {
  const Pair p = random_pair(7);
  const Projector proj(p.lofi, p.hifi);
  const DiscrepancyDataset d = build_discrepancy_dataset(proj, p.xl, p.xh, {0, 3, 6});
  const ScaleSet s = network_scales(d);
  CHECK(s.t_c == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(s.r_xc == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  CHECK(s.u_c == p.xl.states.cwiseAbs().maxCoeff());
  CHECK(s.d_c == d.snapshots.cwiseAbs().maxCoeff());

  const TrainingData td = make_training_data(d, s);
  CHECK(td.inputs.cwiseAbs().maxCoeff() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(td.targets.cwiseAbs().maxCoeff() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(td.grid.final_time() == doctest::Approx(1.0).epsilon(1e-14));
  // Areas scale by 1 / (r_x r_y).
  const Matrix scaled = Matrix(td.mass);
  const Matrix phys = Matrix(assemble_mass(*p.lofi));
  CHECK((scaled - phys / (s.r_xc * s.r_yc)).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK(td.upsample_indices == std::vector<int>{1, 2, 4, 5});
}

TEST_CASE("hybrid prediction") {
  const Pair p = random_pair(8);
  const int n = p.lofi->num_nodes();
  HybridModel h{RnnModel(n, 2), p.lofi, ScaleSet{}};
  h.scales.u_c = 4.0;
  h.scales.d_c = 1e-3;
  SUBCASE("zero model") { CHECK(predict_discrepancy(h, p.xl).states.cwiseAbs().maxCoeff() == 0.0); }
  SUBCASE("scaling and determinism") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> g(0.0, 0.3);
    for (Eigen::Index i = 0; i < h.rnn.size(); ++i) h.rnn.params()[i] = g(rng);
    const Trajectory a = predict_discrepancy(h, p.xl);
    const Trajectory b = predict_discrepancy(h, p.xl);
    CHECK((a.states - b.states).cwiseAbs().maxCoeff() == 0.0);
    const Matrix expect = 1e-3 * predict_sequence(h.rnn, p.xl.states / 4.0);
    CHECK((a.states - expect).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.mesh == p.lofi);
  }
  SUBCASE("mesh mismatch") {
    const Trajectory wrong(p.grid, Matrix::Zero(p.hifi->num_nodes(), 7), p.hifi);
    CHECK_THROWS_AS(predict_discrepancy(h, wrong), ModelError);
    HybridModel none{RnnModel(n, 2), nullptr, ScaleSet{}};
    CHECK_THROWS_AS(predict_discrepancy(none, p.xl), ModelError);
  }
}

TEST_CASE("metrics report round trip") {
  const MetricsReport m{0.0123, 0.2739, 7.59e-5, 11.25};
  const std::string text = metrics_to_json(m);
  for (const char* key : {"delta_l2_discrepancy", "delta_l2_lofi", "delta_l2_corrected", "validation_bound_value"})
    CHECK(text.find(key) != std::string::npos);
  const MetricsReport back = metrics_from_json(text);
  CHECK(back.delta_l2_discrepancy == m.delta_l2_discrepancy);
  CHECK(back.delta_l2_lofi == m.delta_l2_lofi);
  CHECK(back.delta_l2_corrected == m.delta_l2_corrected);
  CHECK(back.validation_bound_value == m.validation_bound_value);
  CHECK_THROWS_AS(metrics_from_json("{\"delta_l2_lofi\": 1}"), ParseError);
  CHECK_THROWS_AS(metrics_from_json("not json"), ParseError);
}
