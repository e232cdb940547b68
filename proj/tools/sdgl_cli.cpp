// Command-line front end. Talks to the library only through the C API.

#include <sdgl/sdgl.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

// Failure carrying the process exit code.
struct CliError {
  int code;
  std::string message;
};

int log_level() {
  const char* env = std::getenv("SDGL_LOG");
  if (env == nullptr) return 1;
  const std::string v = env;
  if (v == "0" || v == "quiet" || v == "error") return 0;
  if (v == "2" || v == "debug") return 2;
  return 1;
}

void log_info(const std::string& msg) {
  if (log_level() >= 1) std::cerr << msg << '\n';
}

void log_debug(const std::string& msg) {
  if (log_level() >= 2) std::cerr << msg << '\n';
}

int exit_code_for(sdgl_status s) {
  switch (s) {
    case SDGL_ERR_ARGUMENT:
    case SDGL_ERR_CONFIG:
    case SDGL_ERR_IO:
      return kExitUsage;
    default:
      return kExitRuntime;
  }
}

void check(sdgl_status s, const std::string& context, std::optional<int> code = std::nullopt) {
  if (s == SDGL_OK) return;
  throw CliError{code.value_or(exit_code_for(s)),
                 context + ": " + sdgl_status_name(s) + ": " + sdgl_last_error()};
}

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using DatasetPtr = std::unique_ptr<sdgl_dataset, Deleter<sdgl_dataset, sdgl_dataset_free>>;
using ConfigPtr = std::unique_ptr<sdgl_config, Deleter<sdgl_config, sdgl_config_free>>;
using ModelPtr = std::unique_ptr<sdgl_model, Deleter<sdgl_model, sdgl_model_free>>;
using SynthPtr = std::unique_ptr<sdgl_synth, Deleter<sdgl_synth, sdgl_synth_free>>;

std::string fmt(double v) {
  if (std::isnan(v)) return "undefined";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

json num(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

std::string sha256(const std::string& path) {
  char hex[65];
  check(sdgl_file_sha256(path.c_str(), hex, sizeof(hex)), "hashing " + path);
  return hex;
}

std::string config_text(const sdgl_config* cfg) {
  std::size_t needed = 0;
  check(sdgl_config_to_text(cfg, nullptr, 0, &needed), "config");
  std::string text(needed, '\0');
  check(sdgl_config_to_text(cfg, text.data(), text.size(), &needed), "config");
  text.resize(needed - 1);
  return text;
}

json config_json(const std::string& text) {
  json out = json::object();
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    const auto eq = line.find(" = ");
    if (eq != std::string::npos) out[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw CliError{kExitRuntime, "cannot write " + path.string()};
  f << text;
}

// Dense matrix with a header row of node names so it loads as a dataset.
void write_matrix(const fs::path& path, const std::vector<double>& m, std::size_t n) {
  std::ostringstream os;
  for (std::size_t j = 0; j < n; ++j) os << (j ? "," : "") << 'n' << j;
  os << '\n';
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) os << (j ? "," : "") << fmt(m[i * n + j]);
    os << '\n';
  }
  write_text(path, os.str());
}

void write_edges(const fs::path& path, const std::vector<double>& m, std::size_t n,
                 double threshold) {
  std::ostringstream os;
  os << "source,target,weight\n";
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (m[i * n + j] >= threshold) os << i << ',' << j << ',' << fmt(m[i * n + j]) << '\n';
    }
  }
  write_text(path, os.str());
}

DatasetPtr load_dataset(const std::string& path) {
  if (!fs::exists(path)) throw CliError{kExitUsage, "data file not found: " + path};
  sdgl_dataset* ds = nullptr;
  check(sdgl_dataset_load_csv(path.c_str(), &ds), "loading " + path, kExitUsage);
  return DatasetPtr(ds);
}

ModelPtr load_model(const std::string& path) {
  if (!fs::exists(path)) throw CliError{kExitUsage, "checkpoint not found: " + path};
  sdgl_model* m = nullptr;
  check(sdgl_model_load(path.c_str(), &m), "loading " + path, kExitUsage);
  return ModelPtr(m);
}

void prepare_out_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw CliError{kExitRuntime, "cannot create output directory " + dir.string()};
}

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string command_line(int argc, char** argv) {
  std::string out;
  for (int i = 0; i < argc; ++i) {
    if (i) out += ' ';
    out += argv[i];
  }
  return out;
}

// Options shared by the commands that build or inspect a model.
struct ModelFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs, heads, layers, horizon, window, batch_size;
  std::optional<double> lambda, gamma, momentum, learning_rate;
  std::vector<std::string> ablate;
  std::vector<std::string> sets;
};

void add_model_flags(CLI::App* cmd, ModelFlags& f) {
  cmd->add_option("--config", f.config_path, "Config file of 'key = value' lines")
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "Random seed");
  cmd->add_option("--epochs", f.epochs, "Training epochs");
  cmd->add_option("--lambda", f.lambda, "Graph regularization weight");
  cmd->add_option("--gamma", f.gamma, "Sparsity weight");
  cmd->add_option("--momentum", f.momentum, "Dynamic embedding momentum");
  cmd->add_option("--heads", f.heads, "Attention heads");
  cmd->add_option("--layers", f.layers, "Temporal/graph layers");
  cmd->add_option("--horizon", f.horizon, "Forecast horizon");
  cmd->add_option("--window", f.window, "Input window length");
  cmd->add_option("--batch-size", f.batch_size, "Batch size");
  cmd->add_option("--lr", f.learning_rate, "Learning rate");
  cmd->add_option("--ablate", f.ablate, "Ablation (repeatable)")
      ->check(CLI::IsMember({"no_gloss", "no_dyadj", "no_ifm", "ifm_plus"}));
  cmd->add_option("--set", f.sets, "Extra config override key=value (repeatable)");
}

// Defaults, then the config file, then flags.
ConfigPtr resolve_config(const ModelFlags& f) {
  sdgl_config* raw = nullptr;
  check(sdgl_config_new(&raw), "config");
  ConfigPtr cfg(raw);
  if (!f.config_path.empty()) {
    std::ifstream in(f.config_path);
    std::stringstream ss;
    ss << in.rdbuf();
    check(sdgl_config_apply_text(cfg.get(), ss.str().c_str()), "config file " + f.config_path,
          kExitUsage);
  }
  auto set = [&](const std::string& flag, const std::string& key, const std::string& value) {
    check(sdgl_config_set(cfg.get(), key.c_str(), value.c_str()), "flag " + flag, kExitUsage);
  };
  auto num_str = [](double v) { return fmt(v); };
  if (f.seed) set("--seed", "seed", std::to_string(*f.seed));
  if (f.epochs) set("--epochs", "epochs", std::to_string(*f.epochs));
  if (f.lambda) set("--lambda", "lambda", num_str(*f.lambda));
  if (f.gamma) set("--gamma", "gamma", num_str(*f.gamma));
  if (f.momentum) set("--momentum", "momentum", num_str(*f.momentum));
  if (f.heads) set("--heads", "heads", std::to_string(*f.heads));
  if (f.layers) set("--layers", "layers", std::to_string(*f.layers));
  if (f.horizon) set("--horizon", "horizon", std::to_string(*f.horizon));
  if (f.window) set("--window", "window", std::to_string(*f.window));
  if (f.batch_size) set("--batch-size", "batch_size", std::to_string(*f.batch_size));
  if (f.learning_rate) set("--lr", "learning_rate", num_str(*f.learning_rate));
  if (!f.ablate.empty()) {
    std::string joined;
    for (const auto& a : f.ablate) joined += (joined.empty() ? "" : ",") + a;
    set("--ablate", "ablate", joined);
  }
  for (const auto& kv : f.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw CliError{kExitUsage, "flag --set: expected key=value, got '" + kv + "'"};
    set("--set", kv.substr(0, eq), kv.substr(eq + 1));
  }
  check(sdgl_config_validate(cfg.get()), "configuration", kExitUsage);
  return cfg;
}

json base_manifest(const std::string& command, int argc, char** argv) {
  json m;
  m["command"] = command;
  m["argv"] = command_line(argc, argv);
  m["library_version"] = sdgl_version();
  return m;
}

void write_manifest(const fs::path& dir, const std::string& command, json manifest) {
  const fs::path path = dir / (command + "_manifest.json");
  write_text(path, manifest.dump(2) + "\n");
  log_info("wrote " + path.string());
}

json metrics_json(const sdgl_metrics& m) {
  return {{"mae", num(m.mae)},
          {"rmse", num(m.rmse)},
          {"mape", num(m.mape)},
          {"rse", num(m.rse)},
          {"corr", num(m.corr)}};
}

std::string metrics_text(const std::string& prefix, const sdgl_metrics& m) {
  std::ostringstream os;
  os << prefix << "mae: " << fmt(m.mae) << '\n'
     << prefix << "rmse: " << fmt(m.rmse) << '\n'
     << prefix << "mape: " << fmt(m.mape) << '\n'
     << prefix << "rse: " << fmt(m.rse) << '\n'
     << prefix << "corr: " << fmt(m.corr) << '\n';
  return os.str();
}

struct EpochSink {
  std::ostringstream csv;
};

void on_epoch(const sdgl_epoch_info* e, void* user) {
  auto* sink = static_cast<EpochSink*>(user);
  sink->csv << e->epoch << ',' << fmt(e->train_loss) << ',' << fmt(e->train_mae) << ','
            << fmt(e->graph_loss) << ',' << (e->has_validation ? fmt(e->val_mae) : "") << ','
            << (e->has_validation ? fmt(e->val_rmse) : "") << ','
            << (e->has_validation ? fmt(e->val_mape) : "") << '\n';
  std::ostringstream msg;
  msg << "epoch " << e->epoch << " loss " << e->train_loss << " mae " << e->train_mae;
  if (e->has_validation) msg << " val_mae " << e->val_mae;
  log_info(msg.str());
  log_debug("  graph_loss " + fmt(e->graph_loss));
}

int cmd_train(const std::string& data, const ModelFlags& flags, const fs::path& out_dir,
              const std::string& format, int argc, char** argv) {
  Timer total;
  ConfigPtr cfg = resolve_config(flags);
  DatasetPtr ds = load_dataset(data);
  prepare_out_dir(out_dir);

  EpochSink sink;
  sink.csv << "epoch,train_loss,train_mae,graph_loss,val_mae,val_rmse,val_mape\n";
  Timer train_timer;
  sdgl_model* raw = nullptr;
  check(sdgl_train(ds.get(), cfg.get(), on_epoch, &sink, &raw), "training");
  ModelPtr model(raw);
  const double train_seconds = train_timer.seconds();

  const fs::path ckpt = out_dir / "checkpoint.sdgl";
  const fs::path log = out_dir / "metrics.csv";
  const fs::path cfg_file = out_dir / "config.cfg";
  check(sdgl_model_save(model.get(), ckpt.string().c_str()), "saving checkpoint");
  write_text(log, sink.csv.str());

  sdgl_config* resolved_raw = nullptr;
  check(sdgl_model_config(model.get(), &resolved_raw), "config");
  ConfigPtr resolved(resolved_raw);
  const std::string text = config_text(resolved.get());
  write_text(cfg_file, text);

  json m = base_manifest("train", argc, argv);
  m["config"] = config_json(text);
  m["config_text"] = text;
  m["seed"] = config_json(text)["seed"];
  m["dataset"] = {{"path", data}, {"sha256", sha256(data)}};
  m["outputs"] = {{"checkpoint", ckpt.string()},
                  {"checkpoint_sha256", sha256(ckpt.string())},
                  {"metrics_log", log.string()},
                  {"config", cfg_file.string()}};
  m["timings_seconds"] = {{"train", train_seconds}, {"total", total.seconds()}};
  m["reproduce"] = "sdgl train --data " + data + " --config " + cfg_file.string() + " --out-dir " +
                   out_dir.string();
  write_manifest(out_dir, "train", m);

  if (format == "json") {
    std::cout << json{{"checkpoint", ckpt.string()}, {"sha256", m["outputs"]["checkpoint_sha256"]}}
                     .dump(2)
              << '\n';
  } else {
    std::cout << "checkpoint: " << ckpt.string() << '\n'
              << "sha256: " << m["outputs"]["checkpoint_sha256"].get<std::string>() << '\n';
  }
  return kExitOk;
}

int cmd_eval(const std::string& checkpoint, const std::string& data, const std::string& split_name,
             const fs::path& out_dir, const std::string& format, int argc, char** argv) {
  Timer total;
  ModelPtr model = load_model(checkpoint);
  DatasetPtr ds = load_dataset(data);
  prepare_out_dir(out_dir);
  const sdgl_split split = split_name == "train"        ? SDGL_SPLIT_TRAIN
                           : split_name == "validation" ? SDGL_SPLIT_VALIDATION
                           : split_name == "test"       ? SDGL_SPLIT_TEST
                                                        : SDGL_SPLIT_ALL;
  std::size_t nodes = 0, window = 0, horizon = 0;
  check(sdgl_model_dims(model.get(), &nodes, &window, &horizon), "model");
  std::vector<sdgl_metrics> per(horizon);
  sdgl_metrics avg{};
  std::size_t windows = 0;
  check(sdgl_evaluate(model.get(), ds.get(), split, per.data(), per.size(), &avg, &windows),
        "evaluation");

  json report;
  report["split"] = split_name;
  report["windows"] = windows;
  report["per_horizon"] = json::array();
  for (std::size_t l = 0; l < horizon; ++l) {
    json h = metrics_json(per[l]);
    h["horizon"] = l + 1;
    report["per_horizon"].push_back(h);
  }
  report["average"] = metrics_json(avg);

  std::ostringstream text;
  text << "split: " << split_name << '\n' << "windows: " << windows << '\n';
  for (std::size_t l = 0; l < horizon; ++l) {
    text << metrics_text("horizon_" + std::to_string(l + 1) + ".", per[l]);
  }
  text << metrics_text("average.", avg);

  const fs::path json_path = out_dir / "eval_metrics.json";
  const fs::path text_path = out_dir / "eval_metrics.txt";
  write_text(json_path, report.dump(2) + "\n");
  write_text(text_path, text.str());
  std::cout << (format == "json" ? report.dump(2) + "\n" : text.str());

  json m = base_manifest("eval", argc, argv);
  m["checkpoint"] = {{"path", checkpoint}, {"sha256", sha256(checkpoint)}};
  m["dataset"] = {{"path", data}, {"sha256", sha256(data)}};
  m["split"] = split_name;
  m["outputs"] = {{"json", json_path.string()}, {"text", text_path.string()}};
  m["timings_seconds"] = {{"total", total.seconds()}};
  write_manifest(out_dir, "eval", m);
  return kExitOk;
}

std::vector<std::size_t> parse_indices(const std::string& spec, std::size_t count) {
  std::vector<std::size_t> out;
  if (spec.empty()) return out;
  if (spec == "all") {
    for (std::size_t i = 0; i < count; ++i) out.push_back(i);
    return out;
  }
  std::istringstream is(spec);
  std::string item;
  while (std::getline(is, item, ',')) {
    const auto dash = item.find('-');
    try {
      const std::size_t a = std::stoul(item.substr(0, dash));
      const std::size_t b = dash == std::string::npos ? a : std::stoul(item.substr(dash + 1));
      for (std::size_t i = a; i <= b; ++i) out.push_back(i);
    } catch (const std::exception&) {
      throw CliError{kExitUsage, "flag --windows: cannot parse '" + item + "'"};
    }
  }
  for (std::size_t i : out) {
    if (i >= count) {
      throw CliError{kExitUsage, "flag --windows: window index " + std::to_string(i) +
                                     " out of range (dataset has " + std::to_string(count) +
                                     " windows)"};
    }
  }
  return out;
}

int cmd_export(const std::string& checkpoint, const std::string& data,
               const std::string& windows_spec, std::optional<double> threshold,
               const fs::path& out_dir, const std::string& format, int argc, char** argv) {
  Timer total;
  ModelPtr model = load_model(checkpoint);
  std::size_t nodes = 0, window = 0, horizon = 0;
  check(sdgl_model_dims(model.get(), &nodes, &window, &horizon), "model");
  prepare_out_dir(out_dir);

  json outputs;
  std::vector<double> a(nodes * nodes);
  check(sdgl_static_graph(model.get(), a.data(), a.size()), "static graph");
  const fs::path static_path = out_dir / "static.csv";
  write_matrix(static_path, a, nodes);
  outputs["static"] = static_path.string();
  const double thr = threshold.value_or(1.0 / static_cast<double>(nodes));
  const fs::path edges_path = out_dir / "static_edges.csv";
  write_edges(edges_path, a, nodes, thr);
  outputs["static_edges"] = edges_path.string();

  json m = base_manifest("export-graphs", argc, argv);
  m["checkpoint"] = {{"path", checkpoint}, {"sha256", sha256(checkpoint)}};
  m["threshold"] = thr;

  if (!windows_spec.empty()) {
    if (data.empty()) throw CliError{kExitUsage, "flag --windows requires --data"};
    DatasetPtr ds = load_dataset(data);
    std::size_t steps = 0;
    check(sdgl_dataset_shape(ds.get(), &steps, nullptr), "dataset");
    const std::size_t count = steps >= window ? steps - window + 1 : 0;
    const auto indices = parse_indices(windows_spec, count);
    std::ostringstream index;
    index << "window,start_row,end_row,file\n";
    outputs["dynamic"] = json::array();
    for (std::size_t w : indices) {
      check(sdgl_dynamic_graph(model.get(), ds.get(), w, a.data(), a.size()),
            "dynamic graph for window " + std::to_string(w));
      const fs::path p = out_dir / ("dynamic_" + std::to_string(w) + ".csv");
      write_matrix(p, a, nodes);
      index << w << ',' << w << ',' << w + window << ',' << p.filename().string() << '\n';
      outputs["dynamic"].push_back(p.string());
    }
    const fs::path index_path = out_dir / "dynamic_index.csv";
    write_text(index_path, index.str());
    outputs["dynamic_index"] = index_path.string();
    m["dataset"] = {{"path", data}, {"sha256", sha256(data)}};
    m["windows"] = indices;
  }
  m["outputs"] = outputs;
  m["timings_seconds"] = {{"total", total.seconds()}};
  write_manifest(out_dir, "export-graphs", m);
  if (format == "json") {
    std::cout << outputs.dump(2) << '\n';
  } else {
    std::cout << "static: " << outputs["static"].get<std::string>() << '\n';
    if (outputs.contains("dynamic")) std::cout << "dynamic: " << outputs["dynamic"].size() << " files\n";
  }
  return kExitOk;
}

struct SynthFlags {
  std::size_t steps = 512;
  std::uint64_t seed = 1;
  bool no_self_loops = false;
  bool random_phase = false;
  sdgl_synth_spec spec{};
};

int cmd_synth(SynthFlags f, const fs::path& out_dir, const std::string& format, int argc,
              char** argv) {
  Timer total;
  f.spec.self_loops = f.no_self_loops ? 0 : 1;
  f.spec.random_phase = f.random_phase ? 1 : 0;
  sdgl_synth* raw = nullptr;
  const sdgl_status s = sdgl_synth_generate(&f.spec, f.steps, f.seed, &raw);
  if (s == SDGL_ERR_NUMERIC || s == SDGL_ERR_CONFIG) {
    throw CliError{kExitUsage, std::string("synth: ") + sdgl_last_error() +
                                   " (the coupling must satisfy |alpha| < 1; lower --alpha)"};
  }
  check(s, "synth");
  SynthPtr synth(raw);
  prepare_out_dir(out_dir);
  const std::size_t n = f.spec.nodes;

  const fs::path data = out_dir / "data.csv";
  const fs::path truth = out_dir / "truth.csv";
  const fs::path truth2 = out_dir / "truth_secondary.csv";
  const fs::path schedule = out_dir / "schedule.json";
  check(sdgl_dataset_save_csv(sdgl_synth_dataset(synth.get()), data.string().c_str()), "writing data");
  std::vector<double> a(n * n);
  check(sdgl_synth_truth(synth.get(), 0, a.data(), a.size()), "truth");
  write_matrix(truth, a, n);
  check(sdgl_synth_truth(synth.get(), 1, a.data(), a.size()), "truth");
  write_matrix(truth2, a, n);

  json sched;
  sched["switch_every"] = f.spec.switch_every;
  sched["switch_length"] = f.spec.switch_length;
  sched["rule"] = "step t uses the secondary graph when switch_every > 0 and t mod switch_every >= switch_every - switch_length";
  sched["intervals"] = json::array();
  for (std::size_t i = 0; i < sdgl_synth_interval_count(synth.get()); ++i) {
    std::size_t b = 0, e = 0;
    check(sdgl_synth_interval(synth.get(), i, &b, &e), "schedule");
    sched["intervals"].push_back({{"begin", b}, {"end", e}});
  }
  write_text(schedule, sched.dump(2) + "\n");

  json m = base_manifest("synth", argc, argv);
  m["seed"] = f.seed;
  m["steps"] = f.steps;
  m["spec"] = {{"nodes", n},
               {"edge_prob", f.spec.edge_prob},
               {"alpha", f.spec.alpha},
               {"period", f.spec.period},
               {"amplitude", f.spec.amplitude},
               {"noise_std", f.spec.noise_std},
               {"switch_every", f.spec.switch_every},
               {"switch_length", f.spec.switch_length},
               {"rewire_fraction", f.spec.rewire_fraction},
               {"self_loops", f.spec.self_loops != 0},
               {"random_phase", f.spec.random_phase != 0}};
  m["outputs"] = {{"data", data.string()},
                  {"data_sha256", sha256(data.string())},
                  {"truth", truth.string()},
                  {"truth_secondary", truth2.string()},
                  {"schedule", schedule.string()}};
  m["timings_seconds"] = {{"total", total.seconds()}};
  write_manifest(out_dir, "synth", m);
  if (format == "json") {
    std::cout << m["outputs"].dump(2) << '\n';
  } else {
    std::cout << "data: " << data.string() << " (" << f.steps << "x" << n << ")\n"
              << "truth: " << truth.string() << '\n';
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Static and dynamic graph learning forecaster"};
  app.require_subcommand(1);
  std::string format = "text";
  std::string out_dir = ".";
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--out-dir", out_dir, "Directory for outputs and the manifest");
    cmd->add_option("--format", format, "Report format")->check(CLI::IsMember({"text", "json"}));
  };

  std::string data;
  ModelFlags model_flags;
  auto* train = app.add_subcommand("train", "Train a model and write a checkpoint");
  train->add_option("--data", data, "CSV dataset")->required();
  add_model_flags(train, model_flags);
  add_common(train);

  std::string checkpoint;
  std::string split = "test";
  auto* eval = app.add_subcommand("eval", "Per-horizon and averaged metrics");
  eval->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  eval->add_option("--data", data, "CSV dataset")->required();
  eval->add_option("--split", split, "Windows to score")
      ->check(CLI::IsMember({"train", "validation", "test", "all"}));
  add_common(eval);

  std::string windows;
  std::optional<double> threshold;
  auto* exp = app.add_subcommand("export-graphs", "Write learned graphs as CSV");
  exp->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  exp->add_option("--data", data, "CSV dataset (needed for dynamic graphs)");
  exp->add_option("--windows", windows, "Window indices: 'all', or a list like 0,3,10-12");
  exp->add_option("--threshold", threshold, "Edge-list threshold (default 1/N)");
  add_common(exp);

  SynthFlags sf;
  sdgl_synth_spec_default(&sf.spec);
  auto* syn = app.add_subcommand("synth", "Generate a planted-graph dataset");
  syn->add_option("--nodes", sf.spec.nodes, "Number of series");
  syn->add_option("--steps", sf.steps, "Time steps");
  syn->add_option("--seed", sf.seed, "Random seed");
  syn->add_option("--edge-prob", sf.spec.edge_prob, "Edge probability");
  syn->add_option("--alpha", sf.spec.alpha, "Coupling strength");
  syn->add_option("--period", sf.spec.period, "Seasonal period");
  syn->add_option("--amplitude", sf.spec.amplitude, "Seasonal amplitude");
  syn->add_option("--noise", sf.spec.noise_std, "Noise standard deviation");
  syn->add_option("--switch-every", sf.spec.switch_every, "Switching period (0 disables)");
  syn->add_option("--switch-length", sf.spec.switch_length, "Switched steps per period");
  syn->add_option("--rewire", sf.spec.rewire_fraction, "Fraction of edges rewired when switched");
  syn->add_flag("--no-self-loops", sf.no_self_loops, "Drop self-loops from the transition");
  syn->add_flag("--random-phase", sf.random_phase, "Per-node seasonal phase");
  add_common(syn);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train) return cmd_train(data, model_flags, out_dir, format, argc, argv);
    if (*eval) return cmd_eval(checkpoint, data, split, out_dir, format, argc, argv);
    if (*exp) return cmd_export(checkpoint, data, windows, threshold, out_dir, format, argc, argv);
    if (*syn) return cmd_synth(sf, out_dir, format, argc, argv);
  } catch (const CliError& e) {
    std::cerr << "error: " << e.message << '\n';
    return e.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
