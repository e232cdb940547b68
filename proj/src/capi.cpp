#include "sdgl/sdgl.h"

#include <openssl/evp.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <memory>
#include <string>

#include "config.hpp"
#include "dataset.hpp"
#include "errors.hpp"
#include "metrics.hpp"
#include "model.hpp"
#include "synth.hpp"

struct sdgl_dataset {
  sdgl::SeriesDataset ds;
};

struct sdgl_config {
  sdgl::ModelConfig cfg;
};

struct sdgl_model {
  sdgl::Checkpoint ckpt;
};

struct sdgl_synth {
  sdgl::SynthResult result;
  sdgl_dataset view;
};

namespace {

thread_local std::string g_last_error;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

sdgl_status fail(sdgl_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

// Runs fn and maps library exceptions onto status codes.
template <typename Fn>
sdgl_status guarded(Fn&& fn) {
  try {
    g_last_error.clear();
    fn();
    return SDGL_OK;
  } catch (const sdgl::ConfigError& e) {
    return fail(SDGL_ERR_CONFIG, e.what());
  } catch (const sdgl::DimensionError& e) {
    return fail(SDGL_ERR_DIMENSION, e.what());
  } catch (const sdgl::ParseError& e) {
    return fail(SDGL_ERR_PARSE, e.what());
  } catch (const sdgl::IoError& e) {
    return fail(SDGL_ERR_IO, e.what());
  } catch (const sdgl::NumericError& e) {
    return fail(SDGL_ERR_NUMERIC, e.what());
  } catch (const sdgl::DegenerateGraphError& e) {
    return fail(SDGL_ERR_NUMERIC, e.what());
  } catch (const sdgl::TrainingError& e) {
    return fail(SDGL_ERR_TRAINING, e.what());
  } catch (const sdgl::StateError& e) {
    return fail(SDGL_ERR_STATE, e.what());
  } catch (const sdgl::ContractError& e) {
    return fail(SDGL_ERR_ARGUMENT, e.what());
  } catch (const std::exception& e) {
    return fail(SDGL_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(SDGL_ERR_INTERNAL, "unknown error");
  }
}

void require(const void* p, const char* what) {
  if (p == nullptr) throw sdgl::ContractError(std::string(what) + " must not be NULL");
}

void copy_out(const std::vector<double>& src, double* out, std::size_t capacity) {
  require(out, "output buffer");
  if (capacity < src.size()) {
    throw sdgl::ContractError("output buffer holds " + std::to_string(capacity) + " values, need " +
                              std::to_string(src.size()));
  }
  std::copy(src.begin(), src.end(), out);
}

sdgl_metrics to_c(const sdgl::MetricReport& r) {
  return {r.mae, r.rmse, r.mape.value_or(kNaN), r.rse.value_or(kNaN), r.corr.value_or(kNaN)};
}

}  // namespace

extern "C" {

const char* sdgl_last_error(void) { return g_last_error.c_str(); }

const char* sdgl_status_name(sdgl_status status) {
  switch (status) {
    case SDGL_OK: return "ok";
    case SDGL_ERR_ARGUMENT: return "argument error";
    case SDGL_ERR_CONFIG: return "config error";
    case SDGL_ERR_DIMENSION: return "dimension error";
    case SDGL_ERR_PARSE: return "parse error";
    case SDGL_ERR_IO: return "io error";
    case SDGL_ERR_NUMERIC: return "numeric error";
    case SDGL_ERR_TRAINING: return "training error";
    case SDGL_ERR_STATE: return "state error";
    case SDGL_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* sdgl_version(void) { return "1.0.0"; }

sdgl_status sdgl_dataset_load_csv(const char* path, sdgl_dataset** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new sdgl_dataset{sdgl::load_csv(path)};
  });
}

sdgl_status sdgl_dataset_from_values(const double* values, size_t steps, size_t nodes,
                                     sdgl_dataset** out) {
  return guarded([&] {
    require(values, "values");
    require(out, "out");
    if (steps == 0 || nodes == 0) throw sdgl::ContractError("dataset needs steps, nodes >= 1");
    auto d = std::make_unique<sdgl_dataset>();
    d->ds.name = "memory";
    d->ds.steps = steps;
    d->ds.nodes = nodes;
    d->ds.values.assign(values, values + steps * nodes);
    for (double v : d->ds.values) {
      if (!std::isfinite(v)) throw sdgl::NumericError("dataset values must be finite");
    }
    for (std::size_t j = 0; j < nodes; ++j) d->ds.node_names.push_back("n" + std::to_string(j));
    *out = d.release();
  });
}

sdgl_status sdgl_dataset_save_csv(const sdgl_dataset* ds, const char* path) {
  return guarded([&] {
    require(ds, "dataset");
    require(path, "path");
    sdgl::save_csv(ds->ds, path);
  });
}

sdgl_status sdgl_dataset_shape(const sdgl_dataset* ds, size_t* steps, size_t* nodes) {
  return guarded([&] {
    require(ds, "dataset");
    if (steps) *steps = ds->ds.steps;
    if (nodes) *nodes = ds->ds.nodes;
  });
}

sdgl_status sdgl_dataset_values(const sdgl_dataset* ds, double* out, size_t capacity) {
  return guarded([&] {
    require(ds, "dataset");
    copy_out(ds->ds.values, out, capacity);
  });
}

void sdgl_dataset_free(sdgl_dataset* ds) { delete ds; }

size_t sdgl_window_count(size_t steps, size_t window, size_t horizon) {
  return sdgl::window_count(steps, window, horizon);
}

sdgl_status sdgl_file_sha256(const char* path, char* out_hex, size_t capacity) {
  return guarded([&] {
    require(path, "path");
    require(out_hex, "out_hex");
    if (capacity < 65) throw sdgl::ContractError("sha256 buffer needs 65 bytes");
    std::ifstream f(path, std::ios::binary);
    if (!f) throw sdgl::IoError(std::string("cannot open file: ") + path);
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
      throw std::runtime_error("sha256 initialisation failed");
    }
    char buf[1 << 16];
    while (f) {
      f.read(buf, sizeof(buf));
      if (f.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf, static_cast<std::size_t>(f.gcount()));
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), digest, &len);
    static constexpr char kHex[] = "0123456789abcdef";
    for (unsigned int i = 0; i < len; ++i) {
      out_hex[2 * i] = kHex[digest[i] >> 4];
      out_hex[2 * i + 1] = kHex[digest[i] & 0xf];
    }
    out_hex[2 * len] = '\0';
  });
}

sdgl_status sdgl_config_new(sdgl_config** out) {
  return guarded([&] {
    require(out, "out");
    *out = new sdgl_config{};
  });
}

sdgl_status sdgl_config_clone(const sdgl_config* cfg, sdgl_config** out) {
  return guarded([&] {
    require(cfg, "config");
    require(out, "out");
    *out = new sdgl_config{cfg->cfg};
  });
}

sdgl_status sdgl_config_set(sdgl_config* cfg, const char* key, const char* value) {
  return guarded([&] {
    require(cfg, "config");
    require(key, "key");
    require(value, "value");
    cfg->cfg.set(key, value);
  });
}

sdgl_status sdgl_config_apply_text(sdgl_config* cfg, const char* text) {
  return guarded([&] {
    require(cfg, "config");
    require(text, "text");
    cfg->cfg.apply_text(text);
  });
}

sdgl_status sdgl_config_validate(const sdgl_config* cfg) {
  return guarded([&] {
    require(cfg, "config");
    // Node count is resolved from the dataset at train time.
    sdgl::ModelConfig probe = cfg->cfg;
    if (probe.nodes == 0) probe.nodes = 2;
    probe.validate();
  });
}

sdgl_status sdgl_config_to_text(const sdgl_config* cfg, char* out, size_t capacity,
                                size_t* needed) {
  return guarded([&] {
    require(cfg, "config");
    const std::string text = cfg->cfg.to_text();
    if (needed) *needed = text.size() + 1;
    if (out == nullptr && capacity == 0) return;
    require(out, "out");
    if (capacity < text.size() + 1) throw sdgl::ContractError("config text buffer too small");
    std::memcpy(out, text.c_str(), text.size() + 1);
  });
}

void sdgl_config_free(sdgl_config* cfg) { delete cfg; }

void sdgl_synth_spec_default(sdgl_synth_spec* spec) {
  if (spec == nullptr) return;
  const sdgl::PlantedGraphSpec d;
  *spec = {d.nodes,        d.edge_prob,     d.alpha,           d.period,
           d.amplitude,    d.noise_std,     d.switch_every,    d.switch_length,
           d.rewire_fraction, d.self_loops ? 1 : 0, d.random_phase ? 1 : 0};
}

sdgl_status sdgl_synth_generate(const sdgl_synth_spec* spec, size_t steps, uint64_t seed,
                                sdgl_synth** out) {
  return guarded([&] {
    require(spec, "spec");
    require(out, "out");
    sdgl::PlantedGraphSpec s;
    s.nodes = spec->nodes;
    s.edge_prob = spec->edge_prob;
    s.alpha = spec->alpha;
    s.period = spec->period;
    s.amplitude = spec->amplitude;
    s.noise_std = spec->noise_std;
    s.switch_every = spec->switch_every;
    s.switch_length = spec->switch_length;
    s.rewire_fraction = spec->rewire_fraction;
    s.self_loops = spec->self_loops != 0;
    s.random_phase = spec->random_phase != 0;
    auto r = std::make_unique<sdgl_synth>();
    r->result = sdgl::synth_generate(s, steps, seed);
    r->view.ds = r->result.dataset;
    *out = r.release();
  });
}

const sdgl_dataset* sdgl_synth_dataset(const sdgl_synth* s) { return s ? &s->view : nullptr; }

sdgl_status sdgl_synth_truth(const sdgl_synth* s, int which, double* out, size_t capacity) {
  return guarded([&] {
    require(s, "synth");
    if (which != 0 && which != 1) throw sdgl::ContractError("truth index must be 0 or 1");
    copy_out(which == 0 ? s->result.primary : s->result.secondary, out, capacity);
  });
}

size_t sdgl_synth_interval_count(const sdgl_synth* s) {
  return s ? s->result.switched_intervals.size() : 0;
}

sdgl_status sdgl_synth_interval(const sdgl_synth* s, size_t index, size_t* begin, size_t* end) {
  return guarded([&] {
    require(s, "synth");
    if (index >= s->result.switched_intervals.size()) {
      throw sdgl::ContractError("interval index " + std::to_string(index) + " out of range");
    }
    if (begin) *begin = s->result.switched_intervals[index].begin;
    if (end) *end = s->result.switched_intervals[index].end;
  });
}

void sdgl_synth_free(sdgl_synth* s) { delete s; }

sdgl_status sdgl_train(const sdgl_dataset* ds, const sdgl_config* cfg,
                       sdgl_epoch_callback callback, void* user, sdgl_model** out) {
  return guarded([&] {
    require(ds, "dataset");
    require(cfg, "config");
    require(out, "out");
    sdgl::EpochCallback cb;
    if (callback) {
      cb = [&](const sdgl::EpochLog& e) {
        sdgl_epoch_info info{e.epoch, e.train_loss, e.train_mae, e.graph_loss, 0, kNaN, kNaN, kNaN};
        if (e.validation) {
          info.has_validation = 1;
          info.val_mae = e.validation->mae;
          info.val_rmse = e.validation->rmse;
          info.val_mape = e.validation->mape.value_or(kNaN);
        }
        callback(&info, user);
      };
    }
    auto m = std::make_unique<sdgl_model>();
    m->ckpt = sdgl::train(ds->ds, cfg->cfg, cb);
    *out = m.release();
  });
}

sdgl_status sdgl_model_save(const sdgl_model* m, const char* path) {
  return guarded([&] {
    require(m, "model");
    require(path, "path");
    sdgl::save_checkpoint(m->ckpt, path);
  });
}

sdgl_status sdgl_model_load(const char* path, sdgl_model** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    auto m = std::make_unique<sdgl_model>();
    m->ckpt = sdgl::load_checkpoint(path);
    *out = m.release();
  });
}

sdgl_status sdgl_model_config(const sdgl_model* m, sdgl_config** out) {
  return guarded([&] {
    require(m, "model");
    require(out, "out");
    *out = new sdgl_config{m->ckpt.config()};
  });
}

sdgl_status sdgl_model_dims(const sdgl_model* m, size_t* nodes, size_t* window, size_t* horizon) {
  return guarded([&] {
    require(m, "model");
    const auto& c = m->ckpt.config();
    if (nodes) *nodes = c.nodes;
    if (window) *window = c.window;
    if (horizon) *horizon = c.horizon;
  });
}

void sdgl_model_free(sdgl_model* m) { delete m; }

sdgl_status sdgl_predict(const sdgl_model* m, const double* window, size_t window_len,
                         double* out, size_t capacity) {
  return guarded([&] {
    require(m, "model");
    require(window, "window");
    copy_out(sdgl::predict(m->ckpt, std::span<const double>(window, window_len)), out, capacity);
  });
}

sdgl_status sdgl_evaluate(const sdgl_model* m, const sdgl_dataset* ds, sdgl_split split,
                          sdgl_metrics* per_horizon, size_t capacity, sdgl_metrics* averaged,
                          size_t* windows) {
  return guarded([&] {
    require(m, "model");
    require(ds, "dataset");
    const auto& cfg = m->ckpt.config();
    if (ds->ds.nodes != cfg.nodes) {
      throw sdgl::DimensionError("dataset has " + std::to_string(ds->ds.nodes) +
                                 " nodes, checkpoint expects " + std::to_string(cfg.nodes));
    }
    std::vector<std::size_t> starts;
    if (split == SDGL_SPLIT_ALL) {
      const std::size_t n = sdgl::window_count(ds->ds.steps, cfg.window, cfg.horizon);
      if (n == 0) throw sdgl::DimensionError("dataset too short for one window");
      for (std::size_t i = 0; i < n; ++i) starts.push_back(i);
    } else {
      const auto splits = sdgl::split_for(cfg, ds->ds);
      std::size_t index = static_cast<std::size_t>(split);
      if (split == SDGL_SPLIT_TEST) index = splits.starts.size() - 1;
      if (split < 0 || index >= splits.starts.size() ||
          (split == SDGL_SPLIT_TEST && splits.starts.size() < 3) ||
          (split == SDGL_SPLIT_VALIDATION && cfg.val_ratio <= 0.0)) {
        throw sdgl::ContractError("requested split is empty under this configuration");
      }
      starts = splits.starts[index];
    }
    const auto report = sdgl::evaluate(m->ckpt, ds->ds, starts);
    if (per_horizon) {
      if (capacity < report.per_horizon.size()) {
        throw sdgl::ContractError("per-horizon buffer holds " + std::to_string(capacity) +
                                  " entries, need " + std::to_string(report.per_horizon.size()));
      }
      for (std::size_t i = 0; i < report.per_horizon.size(); ++i) {
        per_horizon[i] = to_c(report.per_horizon[i]);
      }
    }
    if (averaged) *averaged = to_c(report.averaged);
    if (windows) *windows = report.windows;
  });
}

sdgl_status sdgl_static_graph(const sdgl_model* m, double* out, size_t capacity) {
  return guarded([&] {
    require(m, "model");
    copy_out(sdgl::static_graph(m->ckpt), out, capacity);
  });
}

sdgl_status sdgl_dynamic_graph(const sdgl_model* m, const sdgl_dataset* ds, size_t window_start,
                               double* out, size_t capacity) {
  return guarded([&] {
    require(m, "model");
    require(ds, "dataset");
    copy_out(sdgl::dynamic_graph(m->ckpt, ds->ds, window_start), out, capacity);
  });
}

sdgl_status sdgl_recovery_auc(const double* learned, const double* truth, size_t nodes,
                              double* auc, int* defined) {
  return guarded([&] {
    require(learned, "learned");
    require(truth, "truth");
    require(auc, "auc");
    const auto r = sdgl::graph_recovery_auc(std::span<const double>(learned, nodes * nodes),
                                            std::span<const double>(truth, nodes * nodes), nodes);
    *auc = r.value_or(kNaN);
    if (defined) *defined = r ? 1 : 0;
  });
}

}  // extern "C"
