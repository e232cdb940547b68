#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <utility>

#include "errors.hpp"
#include "model.hpp"

namespace sdgl {

namespace {

constexpr char kMagic[4] = {'S', 'D', 'G', 'L'};
constexpr std::uint32_t kMaxRank = 8;

template <typename T>
void put(std::string& out, T value) {
  static_assert(std::is_integral_v<T>);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff));
  }
}

void put_f64(std::string& out, double v) { put(out, std::bit_cast<std::uint64_t>(v)); }

void put_string(std::string& out, const std::string& s) {
  put(out, static_cast<std::uint32_t>(s.size()));
  out += s;
}

class Reader {
 public:
  explicit Reader(std::string bytes) : bytes_(std::move(bytes)) {}

  template <typename T>
  T get(const char* what) {
    need(sizeof(T), what);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(T);
    return static_cast<T>(v);
  }

  double get_f64(const char* what) { return std::bit_cast<double>(get<std::uint64_t>(what)); }

  std::string get_string(const char* what) {
    const auto n = get<std::uint32_t>(what);
    need(n, what);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) {
      throw ParseError(std::string("checkpoint truncated while reading ") + what + " at byte " +
                       std::to_string(pos_));
    }
  }

  std::string bytes_;
  std::size_t pos_ = 0;
};

std::string state_text(const Checkpoint& ckpt) {
  std::ostringstream os;
  os << "[config]\n" << ckpt.config().to_text() << "[state]\n";
  os << "step = " << ckpt.step << "\n";
  os << "rng = " << ckpt.rng.serialize() << "\n";
  return os.str();
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  std::string out(kMagic, sizeof(kMagic));
  put(out, kCheckpointVersion);
  put_string(out, state_text(ckpt));

  ParamList tensors = ckpt.model.state();
  const std::size_t n = ckpt.config().nodes;
  tensors.push_back({"scaler.mean", Tensor({n}, ckpt.scaler.mean)});
  tensors.push_back({"scaler.std", Tensor({n}, ckpt.scaler.std)});
  put(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    put_string(out, name);
    put(out, static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) put(out, static_cast<std::uint64_t>(d));
    for (double v : t.data()) put_f64(out, v);
  }
  return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw ParseError("not a checkpoint file (bad magic)");
  }
  Reader r(bytes.substr(sizeof(kMagic)));
  const auto version = r.get<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    throw ParseError("unsupported checkpoint version " + std::to_string(version) + " (expected " +
                     std::to_string(kCheckpointVersion) + ")");
  }
  const std::string text = r.get_string("header text");
  const auto split = text.find("[state]\n");
  if (text.rfind("[config]\n", 0) != 0 || split == std::string::npos) {
    throw ParseError("checkpoint header lacks [config] or [state] section");
  }
  ModelConfig config;
  config.apply_text(text.substr(9, split - 9));

  Checkpoint ckpt;
  std::istringstream state(text.substr(split + 8));
  std::string line;
  bool have_step = false, have_rng = false;
  while (std::getline(state, line)) {
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq), value = line.substr(eq + 3);
    if (key == "step") {
      ckpt.step = std::stoull(value);
      have_step = true;
    } else if (key == "rng") {
      ckpt.rng = Rng::deserialize(value);
      have_rng = true;
    }
  }
  if (!have_step || !have_rng) throw ParseError("checkpoint [state] lacks step or rng");

  Rng scratch(0);
  ckpt.model = SdglModel::build(config, scratch);

  std::map<std::string, Tensor> stored;
  const auto count = r.get<std::uint32_t>("tensor count");
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = r.get_string("tensor name");
    const auto rank = r.get<std::uint32_t>("tensor rank");
    if (rank > kMaxRank) throw ParseError("tensor '" + name + "' has implausible rank");
    Shape shape(rank);
    for (auto& d : shape) d = r.get<std::uint64_t>("tensor dims");
    std::vector<double> data(shape_numel(shape));
    for (auto& v : data) v = r.get_f64("tensor payload");
    stored.emplace(name, Tensor(std::move(shape), std::move(data)));
  }
  if (!r.done()) throw ParseError("trailing bytes after checkpoint tensors");

  auto take = [&](const std::string& name, const Shape& expect) {
    auto it = stored.find(name);
    if (it == stored.end()) throw ParseError("checkpoint missing tensor '" + name + "'");
    if (it->second.shape() != expect) {
      throw ParseError("checkpoint tensor '" + name + "' has shape " +
                       shape_str(it->second.shape()) + ", expected " + shape_str(expect));
    }
    Tensor t = it->second;
    stored.erase(it);
    return t;
  };
  for (const auto& [name, target] : ckpt.model.state()) {
    const Tensor src = take(name, target.shape());
    Tensor dst = target;
    std::copy(src.data().begin(), src.data().end(), dst.mutable_data().begin());
  }
  const std::size_t n = config.nodes;
  const Tensor mean = take("scaler.mean", {n});
  const Tensor sd = take("scaler.std", {n});
  ckpt.scaler.mean.assign(mean.data().begin(), mean.data().end());
  ckpt.scaler.std.assign(sd.data().begin(), sd.data().end());
  if (!stored.empty()) {
    throw ParseError("checkpoint has unexpected tensor '" + stored.begin()->first + "'");
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  const std::string bytes = serialize_checkpoint(ckpt);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write checkpoint: " + path);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return deserialize_checkpoint(ss.str());
}

}  // namespace sdgl
