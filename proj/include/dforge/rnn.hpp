#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dforge/fem.hpp"
#include "dforge/problem.hpp"
#include "dforge/timestepping.hpp"
#include "dforge/upsample.hpp"

namespace dforge {

/// N_p * 4(2n^2 + n) + n^2 + n.
std::int64_t param_count(std::int64_t n, std::int64_t np);

/// Gate blocks are stacked in the order input, forget, candidate, output:
/// W and U are 4n x n, b has length 4n.
struct LstmCellParams {
  Matrix W;
  Matrix U;
  Vector b;

  static LstmCellParams zeros(int n);
};

struct LstmCellState {
  Vector h;
  Vector c;
};

/// i = s(W_i x + U_i h + b_i), f, o likewise, g = tanh(...);
/// c' = f*c + i*g, h' = o*tanh(c').
LstmCellState lstm_cell_forward(const LstmCellParams& cell, const Vector& x, const Vector& h, const Vector& c);

/// N_p unshared LSTM cells followed by a shared linear output layer. With
/// `relu` the hidden state passes through max(h, 0) before the output layer.
///
/// All parameters live in one flat vector: for each cell W, U (column-major)
/// and b, then W_out (n x n, column-major) and b_out.
class RnnModel {
 public:
  RnnModel() = default;
  RnnModel(int n, int np, bool relu = true);

  int n() const { return n_; }
  int np() const { return np_; }
  bool relu() const { return relu_; }
  std::int64_t size() const { return params_.size(); }

  Vector& params() { return params_; }
  const Vector& params() const { return params_; }

  Eigen::Map<const Matrix> W(int cell) const;
  Eigen::Map<const Matrix> U(int cell) const;
  Eigen::Map<const Vector> b(int cell) const;
  Eigen::Map<const Matrix> Wout() const;
  Eigen::Map<const Vector> bout() const;

  LstmCellParams cell(int j) const;
  void set_cell(int j, const LstmCellParams& p);

  std::int64_t cell_offset(int j) const;
  std::int64_t output_offset() const;

  /// LSTM weights uniform in +-1/sqrt(n), forget bias 1, output layer zero.
  void initialize(std::uint64_t seed);

 private:
  int n_ = 0;
  int np_ = 0;
  bool relu_ = true;
  Vector params_;
};

/// Window start indices over `num_instants` instants. Windows tile the axis
/// from 0; when the count is not a multiple of N_p the last window is
/// right-aligned. `owner_window[k]`/`owner_pos[k]` name the window output used
/// for instant k; the later window wins on overlap.
struct WindowPlan {
  std::vector<int> starts;
  std::vector<int> owner_window;
  std::vector<int> owner_pos;
};

WindowPlan plan_windows(int num_instants, int np);

/// One window: columns are the N_p input vectors, result columns the outputs.
Matrix rnn_forward(const RnnModel& model, const Matrix& window);

/// Outputs at every instant of an n x (N_T+1) input sequence.
Matrix predict_sequence(const RnnModel& model, const Matrix& inputs);

/// Ground-truth and artificial targets of the weighted loss.
struct LossTargets {
  std::vector<int> samples;
  Matrix targets;
  std::vector<double> beta;
  std::vector<int> up_indices;
  Matrix up_states;
};

/// (1/n)(sum_S beta_k |d_k - y_k| + sum_up |d*_k - y_k|) with Euclidean |.|.
/// `outputs` holds one column per instant. When `d_outputs` is given it
/// receives the (sub)gradient with respect to the outputs.
double weighted_loss(const Matrix& outputs, const LossTargets& targets, Matrix* d_outputs = nullptr);

struct LossGradient {
  double loss = 0.0;
  Vector gradient;
  Matrix outputs;
};

/// Forward pass over all windows, weighted loss and backpropagation through
/// time. The gradient uses the parameter layout of RnnModel.
LossGradient loss_and_gradient(const RnnModel& model, const Matrix& inputs, const LossTargets& targets);

struct AdamState {
  Vector m;
  Vector v;
  std::int64_t step = 0;

  AdamState() = default;
  explicit AdamState(Eigen::Index size) : m(Vector::Zero(size)), v(Vector::Zero(size)) {}
};

struct AdamConstants {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

void adam_step(Vector& params, const Vector& grad, AdamState& state, double lr, const AdamConstants& c = {});

/// beta_k = 1 + ||delta_k - y_k||_M for each sampled instant.
std::vector<double> update_beta(const Matrix& targets, const Matrix& predictions, const MassNorm& norm);

struct ScheduleSegment {
  int begin = 0;
  int end = 0;
  double lr = 1e-3;
  bool beta = false;
};

struct TrainConfig {
  std::vector<ScheduleSegment> schedule;
  int np = 2;
  bool relu = true;
  bool upsampling = true;
  std::uint64_t seed = 0;

  int total_epochs() const { return schedule.empty() ? 0 : schedule.back().end; }
  /// Segments must be contiguous from epoch 0 with positive rates.
  void validate() const;
};

/// Scaled network data: inputs at every instant, targets at sampled instants.
struct TrainingData {
  TimeGrid grid;
  Matrix inputs;
  std::vector<int> samples;
  Matrix targets;
  std::vector<int> upsample_indices;
  /// Mass matrix used for the beta update.
  SparseMatrix mass;
};

struct HistoryRow {
  int epoch = 0;
  double loss = 0.0;
  double delta_l2 = 0.0;
  double lr = 0.0;
  bool beta = false;
};

/// Maps the outputs of a forward pass (scaled, one column per instant) to
/// the relative discrepancy error reported in the history.
using TrainMonitor = std::function<double(const Matrix& outputs)>;

struct TrainResult {
  RnnModel model;
  std::vector<HistoryRow> history;
  std::vector<double> beta;
  bool diverged = false;
};

/// Full-batch training. Each epoch draws a fresh upsampled set, runs the
/// forward pass, refreshes beta in beta-on epochs, evaluates the loss,
/// backpropagates and takes one Adam step. A non-finite loss stops training
/// and returns the last finite parameters.
TrainResult train(const TrainingData& data, const TrainConfig& cfg, const UpsampleConfig& up,
                  const TrainMonitor& monitor = {});

void write_history_csv(const std::vector<HistoryRow>& history, const std::string& path);

struct Checkpoint {
  RnnModel model;
  ScaleSet scales;
  std::uint64_t config_hash = 0;
};

/// Text container: header, n, N_p, relu flag, scales, config hash and every
/// parameter in declared order at 17 significant digits.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace dforge
