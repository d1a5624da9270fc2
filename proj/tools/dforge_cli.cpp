#include <Eigen/Core>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dforge/cases.hpp"
#include "dforge/config.hpp"
#include "dforge/error.hpp"
#include "dforge/hybrid.hpp"
#include "dforge/pipeline.hpp"

namespace fs = std::filesystem;
using namespace dforge;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;

constexpr const char* kCaseFile = "case.cfg";
constexpr const char* kLofiMesh = "mesh_lofi.txt";
constexpr const char* kHifiMesh = "mesh_hifi.txt";
constexpr const char* kReference = "delta_reference.csv";

struct Options {
  std::string case_name;
  std::string fidelity;
  std::string config;
  std::optional<std::uint64_t> seed;
  bool no_upsampling = false;
  std::string out = ".";
  std::string dataset;
  std::string checkpoint;
  std::string mesh;
  std::optional<int> epochs;
};

struct Manifest {
  std::string command;
  std::string started;
  nlohmann::ordered_json artifacts = nlohmann::ordered_json::object();
  nlohmann::ordered_json extra = nlohmann::ordered_json::object();
};

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

int worker_threads() {
  const char* env = std::getenv("DFORGE_THREADS");
  if (!env || !*env) return 1;
  try {
    std::size_t used = 0;
    const int n = std::stoi(env, &used);
    if (used != std::string(env).size() || n < 1) throw std::invalid_argument(env);
    return n;
  } catch (const std::exception&) {
    throw ConfigError(std::string("DFORGE_THREADS must be a positive integer, got '") + env + "'");
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
}

void require_dir(const std::string& dir, const char* what) {
  if (dir.empty()) throw ConfigError(std::string("--") + what + " is required");
  if (!fs::is_directory(dir)) throw IoError(std::string(what) + " directory '" + dir + "' does not exist");
}

void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw ConfigError(std::string("--") + what + " is required");
  if (!fs::is_regular_file(path)) throw IoError(std::string(what) + " file '" + path + "' does not exist");
}

/// Case defaults, then the config file, then explicit flags.
CaseConfig resolve_config(const Options& o, const std::string& dataset_dir = "") {
  CaseConfig cfg;
  std::string path = o.config;
  if (path.empty() && !dataset_dir.empty() && fs::is_regular_file(fs::path(dataset_dir) / kCaseFile))
    path = (fs::path(dataset_dir) / kCaseFile).string();
  if (!path.empty()) {
    const Config file = Config::load(path);
    if (!o.case_name.empty() && file.has("case") && file.get_string("case") != o.case_name)
      throw ConfigError("--case " + o.case_name + " conflicts with case '" + file.get_string("case") + "' in " + path);
    cfg = case_config_from(file, o.case_name.empty() ? "heat" : o.case_name);
  } else {
    cfg = default_case_config(o.case_name.empty() ? "heat" : o.case_name);
    cfg.samples = normalize_samples(cfg.samples, cfg.steps);
  }
  if (o.seed) set_seed(cfg, *o.seed);
  if (o.epochs) set_epochs(cfg, *o.epochs);
  if (o.no_upsampling) cfg.train.upsampling = false;
  return cfg;
}

void finish(const Options& o, Manifest& m, const CaseConfig& cfg, int threads) {
  nlohmann::ordered_json j;
  j["command"] = m.command;
  j["case"] = cfg.name;
  j["config_hash"] = hex64(cfg.hash());
  j["seeds"] = {{"root", cfg.seed}, {"train", cfg.train.seed}, {"upsample", cfg.upsample.seed}};
  j["threads"] = threads;
  j["artifacts"] = m.artifacts;
  for (const auto& [k, v] : m.extra.items()) j[k] = v;
  j["timestamps"] = {{"started", m.started}, {"finished", utc_now()}};
  const fs::path path = fs::path(o.out) / "manifest.json";
  write_text(path, j.dump(2) + "\n");
}

void add_artifact(Manifest& m, const std::string& key, const fs::path& path) {
  if (!fs::exists(path)) throw IoError("artifact " + path.string() + " was not written");
  m.artifacts[key] = path.filename().string();
}

std::vector<Fidelity> fidelities(const std::string& flag) {
  if (flag.empty()) return {Fidelity::Lofi, Fidelity::Hifi};
  return {parse_fidelity(flag)};
}

int cmd_simulate(const Options& o, Manifest& m, int threads) {
  const CaseConfig cfg = resolve_config(o);
  fs::create_directories(o.out);
  for (Fidelity f : fidelities(o.fidelity)) {
    const ProblemSetup setup = build_case(cfg, f);
    const Trajectory traj = simulate(setup);
    const std::string tag = to_string(f);
    const fs::path mesh_path = fs::path(o.out) / ("mesh_" + tag + ".txt");
    const fs::path traj_path = fs::path(o.out) / ("trajectory_" + tag + ".csv");
    write_mesh_file(*setup.mesh, mesh_path.string());
    write_trajectory_csv(traj, traj_path.string());
    add_artifact(m, "mesh_" + tag, mesh_path);
    add_artifact(m, "trajectory_" + tag, traj_path);
    std::cout << tag << ": " << traj.num_dofs() << " dofs, " << traj.grid.num_instants() << " instants\n";
  }
  finish(o, m, cfg, threads);
  return kExitOk;
}

int cmd_dataset(const Options& o, Manifest& m, int threads) {
  const CaseConfig cfg = resolve_config(o);
  const CaseData d = prepare_case(cfg);
  fs::create_directories(o.out);
  const fs::path out(o.out);
  write_mesh_file(*d.pair.lofi.mesh, (out / kLofiMesh).string());
  write_mesh_file(*d.pair.hifi.mesh, (out / kHifiMesh).string());
  write_trajectory_csv(d.hifi, (out / "trajectory_hifi.csv").string());
  write_dataset(d.dataset, o.out);
  write_trajectory_csv(d.reference, (out / kReference).string());
  write_text(out / kCaseFile, cfg.to_text());
  add_artifact(m, "mesh_lofi", out / kLofiMesh);
  add_artifact(m, "mesh_hifi", out / kHifiMesh);
  add_artifact(m, "trajectory_hifi", out / "trajectory_hifi.csv");
  add_artifact(m, "trajectory_lofi", out / "lofi_trajectory.csv");
  add_artifact(m, "sample_indices", out / "sample_indices.csv");
  add_artifact(m, "delta_ground_truth", out / "delta_ground_truth.csv");
  add_artifact(m, "delta_reference", out / kReference);
  add_artifact(m, "config", out / kCaseFile);
  std::cout << "dataset: " << d.dataset.num_dofs() << " lofi dofs, " << d.dataset.samples.size() << " of "
            << d.lofi.grid.num_instants() << " instants sampled\n";
  finish(o, m, cfg, threads);
  return kExitOk;
}

struct LoadedDataset {
  MeshPtr mesh;
  DiscrepancyDataset dataset;
  std::optional<Trajectory> reference;
};

LoadedDataset load_dataset_dir(const std::string& dir) {
  require_dir(dir, "dataset");
  LoadedDataset out;
  out.mesh = std::make_shared<const TriMesh>(read_mesh_file((fs::path(dir) / kLofiMesh).string()));
  out.dataset = read_dataset(dir, out.mesh);
  const fs::path ref = fs::path(dir) / kReference;
  if (fs::is_regular_file(ref)) out.reference = read_trajectory_csv(ref.string(), out.mesh);
  return out;
}

int cmd_train(const Options& o, Manifest& m, int threads) {
  const LoadedDataset data = load_dataset_dir(o.dataset);
  const CaseConfig cfg = resolve_config(o, o.dataset);
  const Trajectory* reference = data.reference ? &*data.reference : nullptr;
  TrainConfig train_cfg = cfg.train;
  const HybridTraining h = train_hybrid(data.dataset, train_cfg, cfg.upsample, reference);

  fs::create_directories(o.out);
  const fs::path out(o.out);
  save_checkpoint(Checkpoint{h.model.rnn, h.model.scales, cfg.hash()}, (out / "checkpoint.txt").string());
  write_history_csv(h.result.history, (out / "history.csv").string());
  add_artifact(m, "checkpoint", out / "checkpoint.txt");
  add_artifact(m, "history", out / "history.csv");
  m.extra["epochs"] = train_cfg.total_epochs();
  m.extra["upsampling"] = train_cfg.upsampling;

  std::cout << "trained " << train_cfg.total_epochs() << " epochs"
            << (train_cfg.upsampling ? " with" : " without") << " upsampling\n";
  if (!h.result.history.empty()) {
    const HistoryRow& last = h.result.history.back();
    std::cout << "final epoch " << last.epoch << ": loss " << last.loss;
    if (reference) std::cout << ", delta_l2 " << last.delta_l2;
    std::cout << '\n';
  }
  if (reference) {
    const MetricsReport metrics = evaluate_hybrid(h.model, data.dataset.lofi, *reference, cfg.validation_bound);
    write_text(out / "metrics.json", metrics_to_json(metrics));
    add_artifact(m, "metrics", out / "metrics.json");
    std::cout << metrics_to_json(metrics);
  }
  finish(o, m, cfg, threads);
  if (h.result.diverged) {
    std::cerr << "error: training diverged; the checkpoint holds the last finite parameters\n";
    return kExitNumerical;
  }
  return kExitOk;
}

HybridModel load_model(const std::string& path, const MeshPtr& mesh) {
  require_file(path, "checkpoint");
  const Checkpoint ckpt = load_checkpoint(path);
  return HybridModel{ckpt.model, mesh, ckpt.scales};
}

int cmd_correct(const Options& o, Manifest& m, int threads) {
  const LoadedDataset data = load_dataset_dir(o.dataset);
  const CaseConfig cfg = resolve_config(o, o.dataset);
  const HybridModel model = load_model(o.checkpoint, data.mesh);
  const Trajectory predicted = predict_discrepancy(model, data.dataset.lofi);
  const Trajectory corrected = bias_correct(data.dataset.lofi, predicted);
  fs::create_directories(o.out);
  const fs::path out(o.out);
  write_trajectory_csv(predicted, (out / "predicted_discrepancy.csv").string());
  write_trajectory_csv(corrected, (out / "corrected_trajectory.csv").string());
  add_artifact(m, "predicted_discrepancy", out / "predicted_discrepancy.csv");
  add_artifact(m, "corrected_trajectory", out / "corrected_trajectory.csv");
  std::cout << "corrected " << corrected.grid.num_instants() << " instants\n";
  finish(o, m, cfg, threads);
  return kExitOk;
}

int cmd_evaluate(const Options& o, Manifest& m, int threads) {
  const LoadedDataset data = load_dataset_dir(o.dataset);
  if (!data.reference) throw IoError("dataset has no " + std::string(kReference));
  const CaseConfig cfg = resolve_config(o, o.dataset);
  const HybridModel model = load_model(o.checkpoint, data.mesh);
  if (!data.reference->grid.same_as(data.dataset.lofi.grid))
    throw DimensionError("reference and lofi trajectories use different time grids");
  const MetricsReport metrics = evaluate_hybrid(model, data.dataset.lofi, *data.reference, cfg.validation_bound);
  fs::create_directories(o.out);
  const fs::path path = fs::path(o.out) / "metrics.json";
  write_text(path, metrics_to_json(metrics));
  add_artifact(m, "metrics", path);
  std::cout << metrics_to_json(metrics);
  finish(o, m, cfg, threads);
  return kExitOk;
}

int cmd_mesh_info(const Options& o) {
  TriMesh mesh = [&] {
    if (!o.mesh.empty()) {
      require_file(o.mesh, "mesh");
      return read_mesh_file(o.mesh);
    }
    const CaseConfig cfg = resolve_config(o);
    return *build_case(cfg, o.fidelity.empty() ? Fidelity::Lofi : parse_fidelity(o.fidelity)).mesh;
  }();
  std::map<int, double> regions;
  for (int t = 0; t < mesh.num_triangles(); ++t) regions[mesh.region_tags()[t]] += mesh.triangle_area(t);
  nlohmann::ordered_json j;
  j["nodes"] = mesh.num_nodes();
  j["triangles"] = mesh.num_triangles();
  j["boundary_nodes"] = mesh.boundary_nodes().size();
  j["area"] = mesh.total_area();
  j["diameter"] = mesh.diameter();
  const Rect b = mesh.bounding_box();
  j["bounding_box"] = {b.xmin, b.ymin, b.xmax, b.ymax};
  nlohmann::ordered_json r = nlohmann::ordered_json::object();
  for (const auto& [tag, area] : regions) r[std::to_string(tag)] = area;
  j["region_areas"] = r;
  std::cout << j.dump(2) << '\n';
  return kExitOk;
}

int exit_code_for(const Error& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const IoError*>(&e) ||
      dynamic_cast<const ParseError*>(&e))
    return kExitUsage;
  return kExitNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-fidelity FE simulation and LSTM discrepancy correction"};
  app.require_subcommand(1);
  Options o;

  auto add_case_flags = [&](CLI::App* sub) {
    sub->add_option("--case", o.case_name, "heat, quadrupole or cavity");
    sub->add_option("--config", o.config, "key = value config file");
    sub->add_option("--seed", o.seed, "root seed");
  };
  auto add_out = [&](CLI::App* sub) { sub->add_option("--out", o.out, "output directory"); };

  CLI::App* simulate_cmd = app.add_subcommand("simulate", "run one or both fidelities and write trajectory CSV");
  add_case_flags(simulate_cmd);
  simulate_cmd->add_option("--fidelity", o.fidelity, "lofi or hifi (default: both)");
  add_out(simulate_cmd);

  CLI::App* dataset_cmd = app.add_subcommand("dataset", "simulate the pair and write the discrepancy dataset");
  add_case_flags(dataset_cmd);
  add_out(dataset_cmd);

  CLI::App* train_cmd = app.add_subcommand("train", "train the hybrid model on a dataset");
  add_case_flags(train_cmd);
  train_cmd->add_option("--dataset", o.dataset, "dataset directory")->required();
  train_cmd->add_option("--epochs", o.epochs, "override the schedule length");
  train_cmd->add_flag("--no-upsampling", o.no_upsampling, "train on the sampled instants only");
  add_out(train_cmd);

  CLI::App* correct_cmd = app.add_subcommand("correct", "bias-correct the dataset's lofi trajectory");
  add_case_flags(correct_cmd);
  correct_cmd->add_option("--dataset", o.dataset, "dataset directory")->required();
  correct_cmd->add_option("--checkpoint", o.checkpoint, "trained checkpoint")->required();
  add_out(correct_cmd);

  CLI::App* evaluate_cmd = app.add_subcommand("evaluate", "write the metrics report of a checkpoint");
  add_case_flags(evaluate_cmd);
  evaluate_cmd->add_option("--dataset", o.dataset, "dataset directory")->required();
  evaluate_cmd->add_option("--checkpoint", o.checkpoint, "trained checkpoint")->required();
  add_out(evaluate_cmd);

  CLI::App* mesh_cmd = app.add_subcommand("mesh-info", "print mesh statistics");
  add_case_flags(mesh_cmd);
  mesh_cmd->add_option("--fidelity", o.fidelity, "lofi or hifi");
  mesh_cmd->add_option("--mesh", o.mesh, "mesh file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    const int threads = worker_threads();
    Eigen::setNbThreads(threads);
    Manifest m;
    m.started = utc_now();
    if (*simulate_cmd) return m.command = "simulate", cmd_simulate(o, m, threads);
    if (*dataset_cmd) return m.command = "dataset", cmd_dataset(o, m, threads);
    if (*train_cmd) return m.command = "train", cmd_train(o, m, threads);
    if (*correct_cmd) return m.command = "correct", cmd_correct(o, m, threads);
    if (*evaluate_cmd) return m.command = "evaluate", cmd_evaluate(o, m, threads);
    if (*mesh_cmd) return cmd_mesh_info(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitUsage;
}
