#include "dforge/rnn.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dforge/error.hpp"

namespace dforge {

namespace {

using Array = Eigen::ArrayXXd;

Array sigmoid(const Array& z) { return 1.0 / (1.0 + (-z).exp()); }

struct CellCache {
  Matrix x;
  Matrix h_prev;
  Matrix c_prev;
  Array i, f, g, o;
  Array c;
  Array tanh_c;
  Matrix h;
  Matrix r;
};

struct ForwardCache {
  WindowPlan plan;
  std::vector<CellCache> cells;
  /// Output of cell j for every window, n x windows.
  std::vector<Matrix> y;
};

ForwardCache forward_all(const RnnModel& model, const Matrix& inputs) {
  const int n = model.n();
  if (inputs.rows() != n)
    throw DimensionError("network inputs have " + std::to_string(inputs.rows()) + " rows, expected " +
                         std::to_string(n));
  ForwardCache fc;
  fc.plan = plan_windows(static_cast<int>(inputs.cols()), model.np());
  const auto nw = static_cast<Eigen::Index>(fc.plan.starts.size());
  fc.cells.resize(model.np());
  fc.y.resize(model.np());
  Matrix h = Matrix::Zero(n, nw);
  Matrix c = Matrix::Zero(n, nw);
  for (int j = 0; j < model.np(); ++j) {
    CellCache& cc = fc.cells[j];
    cc.x.resize(n, nw);
    for (Eigen::Index w = 0; w < nw; ++w) cc.x.col(w) = inputs.col(fc.plan.starts[w] + j);
    cc.h_prev = h;
    cc.c_prev = c;
    Matrix z = model.W(j) * cc.x;
    z.noalias() += model.U(j) * h;
    z.colwise() += model.b(j);
    cc.i = sigmoid(z.topRows(n).array());
    cc.f = sigmoid(z.middleRows(n, n).array());
    cc.g = z.middleRows(2 * n, n).array().tanh();
    cc.o = sigmoid(z.bottomRows(n).array());
    cc.c = cc.f * c.array() + cc.i * cc.g;
    cc.tanh_c = cc.c.tanh();
    cc.h = (cc.o * cc.tanh_c).matrix();
    cc.r = model.relu() ? Matrix(cc.h.cwiseMax(0.0)) : cc.h;
    fc.y[j] = model.Wout() * cc.r;
    fc.y[j].colwise() += model.bout();
    h = cc.h;
    c = cc.c.matrix();
  }
  return fc;
}

Matrix gather_outputs(const ForwardCache& fc, int num_instants, int n) {
  Matrix out(n, num_instants);
  for (int k = 0; k < num_instants; ++k) out.col(k) = fc.y[fc.plan.owner_pos[k]].col(fc.plan.owner_window[k]);
  return out;
}

Vector backward_all(const RnnModel& model, const ForwardCache& fc, const Matrix& d_outputs) {
  const int n = model.n();
  const int np = model.np();
  const auto nw = static_cast<Eigen::Index>(fc.plan.starts.size());
  Vector grad = Vector::Zero(model.size());

  std::vector<Matrix> dy(np, Matrix::Zero(n, nw));
  for (Eigen::Index k = 0; k < d_outputs.cols(); ++k)
    dy[fc.plan.owner_pos[k]].col(fc.plan.owner_window[k]) = d_outputs.col(k);

  Eigen::Map<Matrix> d_wout(grad.data() + model.output_offset(), n, n);
  Eigen::Map<Vector> d_bout(grad.data() + model.output_offset() + static_cast<std::int64_t>(n) * n, n);

  Matrix dh_next = Matrix::Zero(n, nw);
  Array dc_next = Array::Zero(n, nw);
  for (int j = np - 1; j >= 0; --j) {
    const CellCache& cc = fc.cells[j];
    d_wout.noalias() += dy[j] * cc.r.transpose();
    d_bout += dy[j].rowwise().sum();
    Matrix dh = model.Wout().transpose() * dy[j];
    if (model.relu()) dh = (cc.h.array() > 0.0).select(dh, 0.0);
    dh += dh_next;

    const Array dh_a = dh.array();
    const Array d_o = dh_a * cc.tanh_c;
    const Array dc = dh_a * cc.o * (1.0 - cc.tanh_c.square()) + dc_next;
    const Array d_f = dc * cc.c_prev.array();
    const Array d_i = dc * cc.g;
    const Array d_g = dc * cc.i;
    dc_next = dc * cc.f;

    Matrix dz(4 * n, nw);
    dz.topRows(n) = (d_i * cc.i * (1.0 - cc.i)).matrix();
    dz.middleRows(n, n) = (d_f * cc.f * (1.0 - cc.f)).matrix();
    dz.middleRows(2 * n, n) = (d_g * (1.0 - cc.g.square())).matrix();
    dz.bottomRows(n) = (d_o * cc.o * (1.0 - cc.o)).matrix();

    const std::int64_t off = model.cell_offset(j);
    const std::int64_t block = static_cast<std::int64_t>(4) * n * n;
    Eigen::Map<Matrix> dw(grad.data() + off, 4 * n, n);
    Eigen::Map<Matrix> du(grad.data() + off + block, 4 * n, n);
    Eigen::Map<Vector> db(grad.data() + off + 2 * block, 4 * n);
    dw.noalias() += dz * cc.x.transpose();
    du.noalias() += dz * cc.h_prev.transpose();
    db += dz.rowwise().sum();
    dh_next.noalias() = model.U(j).transpose() * dz;
  }
  return grad;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::int64_t param_count(std::int64_t n, std::int64_t np) {
  if (n < 1 || np < 1) throw ConfigError("param_count needs n >= 1 and N_p >= 1");
  return np * 4 * (2 * n * n + n) + n * n + n;
}

LstmCellParams LstmCellParams::zeros(int n) {
  return {Matrix::Zero(4 * n, n), Matrix::Zero(4 * n, n), Vector::Zero(4 * n)};
}

LstmCellState lstm_cell_forward(const LstmCellParams& cell, const Vector& x, const Vector& h, const Vector& c) {
  const Eigen::Index n = x.size();
  if (h.size() != n || c.size() != n || cell.W.rows() != 4 * n || cell.W.cols() != n || cell.U.rows() != 4 * n ||
      cell.U.cols() != n || cell.b.size() != 4 * n)
    throw DimensionError("LSTM cell dimensions do not match the input length");
  const Vector z = cell.W * x + cell.U * h + cell.b;
  const Array i = sigmoid(z.segment(0, n).array());
  const Array f = sigmoid(z.segment(n, n).array());
  const Array g = z.segment(2 * n, n).array().tanh();
  const Array o = sigmoid(z.segment(3 * n, n).array());
  LstmCellState s;
  s.c = (f * c.array() + i * g).matrix();
  s.h = (o * s.c.array().tanh()).matrix();
  return s;
}

RnnModel::RnnModel(int n, int np, bool relu) : n_(n), np_(np), relu_(relu) {
  params_ = Vector::Zero(param_count(n, np));
}

std::int64_t RnnModel::cell_offset(int j) const {
  if (j < 0 || j >= np_) throw IndexError("cell index " + std::to_string(j) + " out of range");
  return static_cast<std::int64_t>(j) * 4 * (2 * static_cast<std::int64_t>(n_) * n_ + n_);
}

std::int64_t RnnModel::output_offset() const {
  return static_cast<std::int64_t>(np_) * 4 * (2 * static_cast<std::int64_t>(n_) * n_ + n_);
}

Eigen::Map<const Matrix> RnnModel::W(int cell) const {
  return Eigen::Map<const Matrix>(params_.data() + cell_offset(cell), 4 * n_, n_);
}

Eigen::Map<const Matrix> RnnModel::U(int cell) const {
  return Eigen::Map<const Matrix>(params_.data() + cell_offset(cell) + 4 * static_cast<std::int64_t>(n_) * n_,
                                  4 * n_, n_);
}

Eigen::Map<const Vector> RnnModel::b(int cell) const {
  return Eigen::Map<const Vector>(params_.data() + cell_offset(cell) + 8 * static_cast<std::int64_t>(n_) * n_,
                                  4 * n_);
}

Eigen::Map<const Matrix> RnnModel::Wout() const {
  return Eigen::Map<const Matrix>(params_.data() + output_offset(), n_, n_);
}

Eigen::Map<const Vector> RnnModel::bout() const {
  return Eigen::Map<const Vector>(params_.data() + output_offset() + static_cast<std::int64_t>(n_) * n_, n_);
}

LstmCellParams RnnModel::cell(int j) const { return {W(j), U(j), b(j)}; }

void RnnModel::set_cell(int j, const LstmCellParams& p) {
  if (p.W.rows() != 4 * n_ || p.W.cols() != n_ || p.U.rows() != 4 * n_ || p.U.cols() != n_ || p.b.size() != 4 * n_)
    throw DimensionError("cell parameter shapes do not match the model");
  const std::int64_t off = cell_offset(j);
  const std::int64_t block = 4 * static_cast<std::int64_t>(n_) * n_;
  Eigen::Map<Matrix>(params_.data() + off, 4 * n_, n_) = p.W;
  Eigen::Map<Matrix>(params_.data() + off + block, 4 * n_, n_) = p.U;
  Eigen::Map<Vector>(params_.data() + off + 2 * block, 4 * n_) = p.b;
}

void RnnModel::initialize(std::uint64_t seed) {
  Rng rng = substream(seed, 0xffffffffffffffffULL, 0);
  const double bound = 1.0 / std::sqrt(static_cast<double>(n_));
  std::uniform_real_distribution<double> uniform(-bound, bound);
  params_.setZero();
  const std::int64_t block = 4 * static_cast<std::int64_t>(n_) * n_;
  for (int j = 0; j < np_; ++j) {
    const std::int64_t off = cell_offset(j);
    for (std::int64_t k = 0; k < 2 * block; ++k) params_[off + k] = uniform(rng);
    params_.segment(off + 2 * block + n_, n_).setOnes();
  }
}

WindowPlan plan_windows(int num_instants, int np) {
  if (np < 1) throw ConfigError("window length must be positive");
  if (num_instants < np)
    throw CoverageError("sequence of " + std::to_string(num_instants) + " instants is shorter than one window");
  WindowPlan plan;
  for (int s = 0; s + np <= num_instants; s += np) plan.starts.push_back(s);
  if (num_instants % np != 0) plan.starts.push_back(num_instants - np);
  plan.owner_window.assign(num_instants, -1);
  plan.owner_pos.assign(num_instants, -1);
  for (std::size_t w = 0; w < plan.starts.size(); ++w) {
    for (int j = 0; j < np; ++j) {
      plan.owner_window[plan.starts[w] + j] = static_cast<int>(w);
      plan.owner_pos[plan.starts[w] + j] = j;
    }
  }
  return plan;
}

Matrix rnn_forward(const RnnModel& model, const Matrix& window) {
  if (window.cols() != model.np())
    throw DimensionError("window has " + std::to_string(window.cols()) + " inputs, expected " +
                         std::to_string(model.np()));
  return predict_sequence(model, window);
}

Matrix predict_sequence(const RnnModel& model, const Matrix& inputs) {
  const ForwardCache fc = forward_all(model, inputs);
  return gather_outputs(fc, static_cast<int>(inputs.cols()), model.n());
}

double weighted_loss(const Matrix& outputs, const LossTargets& t, Matrix* d_outputs) {
  const auto n = static_cast<double>(outputs.rows());
  if (t.targets.cols() != static_cast<Eigen::Index>(t.samples.size()) ||
      t.beta.size() != t.samples.size() || t.up_states.cols() != static_cast<Eigen::Index>(t.up_indices.size()))
    throw DimensionError("loss targets are inconsistent");
  if (d_outputs) d_outputs->setZero(outputs.rows(), outputs.cols());
  double loss = 0.0;
  auto term = [&](int k, const auto& target, double weight) {
    if (k < 0 || k >= outputs.cols())
      throw CoverageError("no network output at instant " + std::to_string(k));
    const Vector r = target - outputs.col(k);
    const double norm = r.norm();
    loss += weight * norm;
    if (d_outputs && norm > 0.0) d_outputs->col(k) -= (weight / (n * norm)) * r;
  };
  for (std::size_t j = 0; j < t.samples.size(); ++j)
    term(t.samples[j], t.targets.col(static_cast<Eigen::Index>(j)), t.beta[j]);
  for (std::size_t j = 0; j < t.up_indices.size(); ++j)
    term(t.up_indices[j], t.up_states.col(static_cast<Eigen::Index>(j)), 1.0);
  return loss / n;
}

LossGradient loss_and_gradient(const RnnModel& model, const Matrix& inputs, const LossTargets& targets) {
  const ForwardCache fc = forward_all(model, inputs);
  LossGradient out;
  out.outputs = gather_outputs(fc, static_cast<int>(inputs.cols()), model.n());
  Matrix dy;
  out.loss = weighted_loss(out.outputs, targets, &dy);
  out.gradient = backward_all(model, fc, dy);
  return out;
}

void adam_step(Vector& params, const Vector& grad, AdamState& s, double lr, const AdamConstants& c) {
  if (grad.size() != params.size() || s.m.size() != params.size() || s.v.size() != params.size())
    throw DimensionError("Adam state and parameter shapes differ");
  ++s.step;
  s.m = c.beta1 * s.m + (1.0 - c.beta1) * grad;
  s.v = c.beta2 * s.v + (1.0 - c.beta2) * grad.cwiseAbs2();
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(s.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(s.step));
  params.array() -= lr * (s.m.array() / bc1) / ((s.v.array() / bc2).sqrt() + c.eps);
}

std::vector<double> update_beta(const Matrix& targets, const Matrix& predictions, const MassNorm& norm) {
  if (targets.rows() != predictions.rows() || targets.cols() != predictions.cols())
    throw DimensionError("beta update: target and prediction shapes differ");
  std::vector<double> beta(static_cast<std::size_t>(targets.cols()));
  for (Eigen::Index j = 0; j < targets.cols(); ++j)
    beta[static_cast<std::size_t>(j)] = 1.0 + norm(Vector(targets.col(j) - predictions.col(j)));
  return beta;
}

void TrainConfig::validate() const {
  if (np < 1) throw ConfigError("N_p must be at least 1");
  int expected = 0;
  for (const auto& s : schedule) {
    if (s.begin != expected) throw ConfigError("schedule segments must be contiguous from epoch 0");
    if (s.end <= s.begin) throw ConfigError("schedule segment has no epochs");
    if (!(s.lr > 0.0)) throw ConfigError("learning rates must be positive");
    expected = s.end;
  }
}

TrainResult train(const TrainingData& data, const TrainConfig& cfg, const UpsampleConfig& up,
                  const TrainMonitor& monitor) {
  cfg.validate();
  up.validate();
  const int n = static_cast<int>(data.inputs.rows());
  if (data.inputs.cols() != data.grid.num_instants()) throw DimensionError("inputs do not cover the time grid");
  if (data.targets.rows() != n || data.targets.cols() != static_cast<Eigen::Index>(data.samples.size()))
    throw DimensionError("targets do not match the samples");
  const MassNorm norm(data.mass);

  TrainResult result;
  result.model = RnnModel(n, cfg.np, cfg.relu);
  result.model.initialize(cfg.seed);
  result.beta.assign(data.samples.size(), 1.0);
  AdamState adam(result.model.size());

  LossTargets targets;
  targets.samples = data.samples;
  targets.targets = data.targets;
  targets.up_states.resize(n, 0);

  for (const auto& seg : cfg.schedule) {
    for (int epoch = seg.begin; epoch < seg.end; ++epoch) {
      if (cfg.upsampling) {
        UpsampledEpoch fill =
            build_upsampled_epoch(data.grid, data.samples, data.targets, data.upsample_indices, up,
                                  static_cast<std::uint64_t>(epoch));
        targets.up_indices = std::move(fill.indices);
        targets.up_states = std::move(fill.states);
      }
      const ForwardCache fc = forward_all(result.model, data.inputs);
      const Matrix outputs = gather_outputs(fc, static_cast<int>(data.inputs.cols()), n);
      if (seg.beta) {
        Matrix at_samples(n, static_cast<Eigen::Index>(data.samples.size()));
        for (std::size_t j = 0; j < data.samples.size(); ++j)
          at_samples.col(static_cast<Eigen::Index>(j)) = outputs.col(data.samples[j]);
        result.beta = update_beta(data.targets, at_samples, norm);
      } else {
        result.beta.assign(data.samples.size(), 1.0);
      }
      targets.beta = result.beta;
      Matrix dy;
      const double loss = weighted_loss(outputs, targets, &dy);
      if (!std::isfinite(loss)) {
        result.diverged = true;
        return result;
      }
      const Vector grad = backward_all(result.model, fc, dy);
      if (!grad.allFinite()) {
        result.diverged = true;
        return result;
      }
      result.history.push_back({epoch, loss, monitor ? monitor(outputs) : 0.0, seg.lr, seg.beta});
      Vector previous = result.model.params();
      adam_step(result.model.params(), grad, adam, seg.lr);
      if (!result.model.params().allFinite()) {
        result.model.params() = std::move(previous);
        result.diverged = true;
        return result;
      }
    }
  }
  return result;
}

void write_history_csv(const std::vector<HistoryRow>& history, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "epoch,loss,delta_l2,lr,beta_mode\n";
  for (const auto& r : history)
    out << r.epoch << ',' << fmt(r.loss) << ',' << fmt(r.delta_l2) << ',' << fmt(r.lr) << ',' << (r.beta ? 1 : 0)
        << '\n';
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  const auto& m = ckpt.model;
  const auto& s = ckpt.scales;
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(ckpt.config_hash));
  out << "dforge-rnn v1\n";
  out << "n " << m.n() << "\nnp " << m.np() << "\nrelu " << (m.relu() ? 1 : 0) << '\n';
  out << "scales " << fmt(s.t_c) << ' ' << fmt(s.r_xc) << ' ' << fmt(s.r_yc) << ' ' << fmt(s.u_c) << ' '
      << fmt(s.d_c) << '\n';
  out << "config_hash " << hash << '\n';
  out << "params " << m.size() << '\n';
  std::string buf;
  buf.reserve(1 << 16);
  for (std::int64_t i = 0; i < m.size(); ++i) {
    buf += fmt(m.params()[i]);
    buf += '\n';
    if (buf.size() > (1 << 15)) {
      out << buf;
      buf.clear();
    }
  }
  out << buf;
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  int line = 0;
  std::string text;
  auto next = [&](const std::string& key) {
    ++line;
    if (!std::getline(in, text)) throw ParseError("unexpected end of checkpoint", line);
    std::istringstream ls(text);
    std::string k;
    ls >> k;
    if (k != key) throw ParseError("expected '" + key + "'", line);
    std::string rest;
    std::getline(ls, rest);
    return rest;
  };
  ++line;
  if (!std::getline(in, text) || text != "dforge-rnn v1") throw ParseError("not a dforge checkpoint", line);
  Checkpoint c;
  try {
    const int n = std::stoi(next("n"));
    const int np = std::stoi(next("np"));
    const bool relu = std::stoi(next("relu")) != 0;
    std::istringstream sc(next("scales"));
    sc >> c.scales.t_c >> c.scales.r_xc >> c.scales.r_yc >> c.scales.u_c >> c.scales.d_c;
    if (!sc) throw ParseError("bad scales", line);
    c.config_hash = std::stoull(next("config_hash"), nullptr, 16);
    const std::int64_t count = std::stoll(next("params"));
    if (n < 1 || np < 1 || count != param_count(n, np)) throw ParseError("parameter count does not match shape", line);
    c.model = RnnModel(n, np, relu);
    for (std::int64_t i = 0; i < count; ++i) {
      ++line;
      if (!std::getline(in, text)) throw ParseError("unexpected end of parameters", line);
      c.model.params()[i] = std::stod(text);
    }
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception& e) {
    throw ParseError(std::string("malformed checkpoint: ") + e.what(), line);
  }
  return c;
}

}  // namespace dforge
