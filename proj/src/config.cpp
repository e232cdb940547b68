#include "config.hpp"

#include <charconv>
#include <sstream>

#include "dataset.hpp"
#include "errors.hpp"
#include "temporal_conv.hpp"

namespace sdgl {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

template <typename T>
T parse_value(const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  auto res = std::from_chars(value.data(), end, out);
  if (res.ec != std::errc() || res.ptr != end) {
    throw ConfigError("config: invalid value '" + value + "' for " + key);
  }
  return out;
}

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ConfigError("config field '" + field + "': " + what);
}

}  // namespace

std::string Ablations::to_string() const {
  std::string out;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += ',';
    out += name;
  };
  add(no_gloss, "no_gloss");
  add(no_dyadj, "no_dyadj");
  add(no_ifm, "no_ifm");
  add(ifm_plus, "ifm_plus");
  return out.empty() ? "none" : out;
}

std::vector<std::size_t> ModelConfig::dilations() const {
  std::vector<std::size_t> out;
  for (std::size_t j = 1; j <= layers; ++j) out.push_back(layer_dilation(dilation_growth, j));
  return out;
}

std::size_t ModelConfig::receptive_field() const {
  return stack_receptive_field(kMaxKernel, dilations());
}

void ModelConfig::validate() const {
  require(nodes >= 2, "nodes", "need at least 2 nodes");
  require(horizon >= 1, "horizon", "must be >= 1");
  require(embed_dim >= 1, "embed_dim", "must be >= 1");
  require(heads >= 1, "heads", "must be >= 1");
  if (head_dim == 0) {
    require(embed_dim % heads == 0, "heads", "embed_dim must be divisible by heads");
  }
  require(dilation_growth > 1.0, "dilation_growth", "must be > 1");
  require(layers >= 1, "layers", "must be >= 1");
  require(depth >= 1, "depth", "must be >= 1");
  require(channels >= 4 && channels % 4 == 0, "channels", "must be a positive multiple of 4");
  require(skip_channels >= 1, "skip_channels", "must be >= 1");
  require(end_channels >= 1, "end_channels", "must be >= 1");
  const std::size_t rf = receptive_field();
  require(window >= rf, "window",
          "input length " + std::to_string(window) + " is shorter than the receptive field " +
              std::to_string(rf));
  require(lambda >= 0.0, "lambda", "must be >= 0");
  require(gamma >= 0.0, "gamma", "must be >= 0");
  require(momentum >= 0.0 && momentum < 1.0, "momentum", "must lie in [0, 1)");
  require(keep_prob > 0.0 && keep_prob <= 1.0, "keep_prob", "must lie in (0, 1]");
  require(learning_rate > 0.0, "learning_rate", "must be > 0");
  require(clip_norm > 0.0, "clip_norm", "must be > 0");
  require(batch_size >= 1, "batch_size", "must be >= 1");
  require(train_ratio > 0.0 && val_ratio >= 0.0 && train_ratio + val_ratio <= 1.0 + 1e-12,
          "train_ratio", "train/val ratios must be positive and sum to at most 1");
  require(!(ablate.no_ifm && ablate.ifm_plus), "ablate", "no_ifm and ifm_plus are exclusive");
}

std::string ModelConfig::to_text() const {
  std::ostringstream os;
  os << "nodes = " << nodes << '\n'
     << "window = " << window << '\n'
     << "horizon = " << horizon << '\n'
     << "embed_dim = " << embed_dim << '\n'
     << "heads = " << heads << '\n'
     << "head_dim = " << head_dim << '\n'
     << "dilation_growth = " << format_double(dilation_growth) << '\n'
     << "layers = " << layers << '\n'
     << "depth = " << depth << '\n'
     << "channels = " << channels << '\n'
     << "skip_channels = " << skip_channels << '\n'
     << "end_channels = " << end_channels << '\n'
     << "mlp_hidden = " << mlp_hidden << '\n'
     << "lambda = " << format_double(lambda) << '\n'
     << "gamma = " << format_double(gamma) << '\n'
     << "momentum = " << format_double(momentum) << '\n'
     << "keep_prob = " << format_double(keep_prob) << '\n'
     << "learning_rate = " << format_double(learning_rate) << '\n'
     << "clip_norm = " << format_double(clip_norm) << '\n'
     << "batch_size = " << batch_size << '\n'
     << "epochs = " << epochs << '\n'
     << "seed = " << seed << '\n'
     << "train_ratio = " << format_double(train_ratio) << '\n'
     << "val_ratio = " << format_double(val_ratio) << '\n'
     << "ablate = " << ablate.to_string() << '\n';
  return os.str();
}

void ModelConfig::set(const std::string& raw_key, const std::string& raw_value) {
  const std::string key = trim(raw_key);
  const std::string value = trim(raw_value);
  auto size = [&] { return parse_value<std::size_t>(key, value); };
  auto real = [&] { return parse_value<double>(key, value); };
  if (key == "nodes") nodes = size();
  else if (key == "window") window = size();
  else if (key == "horizon") horizon = size();
  else if (key == "embed_dim") embed_dim = size();
  else if (key == "heads") heads = size();
  else if (key == "head_dim") head_dim = size();
  else if (key == "dilation_growth") dilation_growth = real();
  else if (key == "layers") layers = size();
  else if (key == "depth") depth = size();
  else if (key == "channels") channels = size();
  else if (key == "skip_channels") skip_channels = size();
  else if (key == "end_channels") end_channels = size();
  else if (key == "mlp_hidden") mlp_hidden = size();
  else if (key == "lambda") lambda = real();
  else if (key == "gamma") gamma = real();
  else if (key == "momentum") momentum = real();
  else if (key == "keep_prob") keep_prob = real();
  else if (key == "learning_rate") learning_rate = real();
  else if (key == "clip_norm") clip_norm = real();
  else if (key == "batch_size") batch_size = size();
  else if (key == "epochs") epochs = size();
  else if (key == "seed") seed = parse_value<std::uint64_t>(key, value);
  else if (key == "train_ratio") train_ratio = real();
  else if (key == "val_ratio") val_ratio = real();
  else if (key == "ablate") {
    ablate = {};
    std::istringstream is(value);
    std::string item;
    while (std::getline(is, item, ',')) {
      item = trim(item);
      if (item.empty() || item == "none") continue;
      if (item == "no_gloss") ablate.no_gloss = true;
      else if (item == "no_dyadj") ablate.no_dyadj = true;
      else if (item == "no_ifm") ablate.no_ifm = true;
      else if (item == "ifm_plus") ablate.ifm_plus = true;
      else throw ConfigError("config: unknown ablation '" + item + "'");
    }
  } else {
    throw ConfigError("config: unknown key '" + key + "'");
  }
}

void ModelConfig::apply_text(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    set(line.substr(0, eq), line.substr(eq + 1));
  }
}

}  // namespace sdgl
