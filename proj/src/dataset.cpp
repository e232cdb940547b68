#include "dataset.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "errors.hpp"

namespace sdgl {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool parse_number(const std::string& text, double& out) {
  if (text.empty()) return false;
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto res = std::from_chars(begin, end, out);
  return res.ec == std::errc() && res.ptr == end;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

SeriesDataset parse_csv(const std::string& text, const std::string& name) {
  std::istringstream is(text);
  std::string line;
  std::size_t line_no = 0;
  SeriesDataset ds;
  ds.name = name;
  bool header_done = false;
  bool has_time = false;
  std::size_t width = 0;
  std::vector<std::size_t> nan_rows;
  while (std::getline(is, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_fields(line);
    for (auto& f : fields) f = trim(f);
    if (!header_done) {
      if (!fields.empty() && (fields[0] == "timestamp" || fields[0] == "time")) {
        has_time = true;
        fields.erase(fields.begin());
      }
      ds.node_names = fields;
      ds.nodes = fields.size();
      width = fields.size() + (has_time ? 1 : 0);
      header_done = true;
      continue;
    }
    if (fields.size() != width) {
      throw ParseError(name + ": ragged row at line " + std::to_string(line_no) + " (" +
                       std::to_string(fields.size()) + " fields, expected " +
                       std::to_string(width) + ")");
    }
    const std::size_t row = ds.steps + 1;
    std::size_t col0 = 0;
    if (has_time) {
      std::int64_t ts = 0;
      auto res = std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), ts);
      if (res.ec != std::errc() || res.ptr != fields[0].data() + fields[0].size()) {
        throw ParseError(name + ": non-integer timestamp '" + fields[0] + "' at (" +
                         std::to_string(row) + ",1), line " + std::to_string(line_no));
      }
      if (!ds.timestamps.empty() && ts <= ds.timestamps.back()) {
        throw ParseError(name + ": timestamps not increasing at line " + std::to_string(line_no));
      }
      ds.timestamps.push_back(ts);
      col0 = 1;
    }
    bool has_nan = false;
    for (std::size_t c = col0; c < fields.size(); ++c) {
      double v = 0.0;
      if (!parse_number(fields[c], v)) {
        throw ParseError(name + ": non-numeric cell '" + fields[c] + "' at (" +
                         std::to_string(row) + "," + std::to_string(c + 1) + "), line " +
                         std::to_string(line_no));
      }
      if (std::isnan(v)) has_nan = true;
      ds.values.push_back(v);
    }
    if (has_nan) nan_rows.push_back(row);
    ++ds.steps;
  }
  if (!header_done) throw ParseError(name + ": empty file");
  if (!nan_rows.empty()) {
    std::string list;
    for (std::size_t i = 0; i < nan_rows.size() && i < 20; ++i) {
      list += (i ? "," : "") + std::to_string(nan_rows[i]);
    }
    throw ParseError(name + ": NaN values in data rows " + list);
  }
  return ds;
}

SeriesDataset load_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open data file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), path);
}

void save_csv(const SeriesDataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  const bool has_time = !ds.timestamps.empty();
  if (has_time) out << "timestamp";
  for (std::size_t j = 0; j < ds.nodes; ++j) {
    if (j || has_time) out << ',';
    out << (j < ds.node_names.size() ? ds.node_names[j] : "node" + std::to_string(j));
  }
  out << '\n';
  for (std::size_t t = 0; t < ds.steps; ++t) {
    if (has_time) out << ds.timestamps[t];
    for (std::size_t j = 0; j < ds.nodes; ++j) {
      if (j || has_time) out << ',';
      out << format_double(ds.at(t, j));
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path);
}

std::size_t window_count(std::size_t steps, std::size_t window, std::size_t horizon) {
  return steps >= window + horizon ? steps - window - horizon + 1 : 0;
}

WindowSplits window_split(const SeriesDataset& ds, std::size_t window, std::size_t horizon,
                          const std::vector<double>& ratios) {
  static const char* kNames[] = {"train", "validation", "test"};
  if (ratios.empty()) throw ConfigError("window_split: no split ratios");
  double total = 0.0;
  for (double r : ratios) {
    if (!(r >= 0.0)) throw ConfigError("window_split: negative split ratio");
    total += r;
  }
  if (std::fabs(total - 1.0) > 1e-9) throw ConfigError("window_split: ratios must sum to 1");
  WindowSplits out;
  std::size_t begin = 0;
  double cumulative = 0.0;
  for (std::size_t k = 0; k < ratios.size(); ++k) {
    cumulative += ratios[k];
    const std::size_t end =
        k + 1 == ratios.size()
            ? ds.steps
            : static_cast<std::size_t>(std::floor(cumulative * static_cast<double>(ds.steps) + 1e-9));
    SplitRange range{begin, end};
    const std::size_t count = window_count(range.length(), window, horizon);
    if (count == 0) {
      const std::string label = ratios.size() <= 3 ? kNames[k] : "split " + std::to_string(k);
      throw ConfigError("window_split: " + label + " split has " +
                        std::to_string(range.length()) + " steps, needs at least " +
                        std::to_string(window + horizon));
    }
    std::vector<std::size_t> starts(count);
    for (std::size_t i = 0; i < count; ++i) starts[i] = begin + i;
    out.ranges.push_back(range);
    out.starts.push_back(std::move(starts));
    begin = end;
  }
  return out;
}

Scaler Scaler::fit(const SeriesDataset& ds, SplitRange rows) {
  if (rows.length() == 0 || rows.end > ds.steps) throw ConfigError("Scaler::fit: empty row range");
  Scaler s;
  s.mean.assign(ds.nodes, 0.0);
  s.std.assign(ds.nodes, 0.0);
  const double n = static_cast<double>(rows.length());
  for (std::size_t j = 0; j < ds.nodes; ++j) {
    double m = 0.0;
    for (std::size_t t = rows.begin; t < rows.end; ++t) m += ds.at(t, j);
    m /= n;
    double v = 0.0;
    for (std::size_t t = rows.begin; t < rows.end; ++t) v += (ds.at(t, j) - m) * (ds.at(t, j) - m);
    s.mean[j] = m;
    s.std[j] = std::max(std::sqrt(v / n), 1e-8);
  }
  return s;
}

std::vector<double> Scaler::transform_all(const SeriesDataset& ds) const {
  std::vector<double> out(ds.values.size());
  for (std::size_t t = 0; t < ds.steps; ++t) {
    for (std::size_t j = 0; j < ds.nodes; ++j) out[t * ds.nodes + j] = transform(ds.at(t, j), j);
  }
  return out;
}

WindowBatch make_batch(std::span<const double> values, std::size_t nodes,
                       std::span<const std::size_t> starts, std::size_t window,
                       std::size_t horizon) {
  const std::size_t B = starts.size();
  std::vector<double> in(B * nodes * window), tgt(B * nodes * horizon);
  for (std::size_t b = 0; b < B; ++b) {
    const std::size_t s = starts[b];
    if ((s + window + horizon) * nodes > values.size()) {
      throw DimensionError("make_batch: window at " + std::to_string(s) + " exceeds the series");
    }
    for (std::size_t n = 0; n < nodes; ++n) {
      for (std::size_t t = 0; t < window; ++t) {
        in[(b * nodes + n) * window + t] = values[(s + t) * nodes + n];
      }
      for (std::size_t l = 0; l < horizon; ++l) {
        tgt[(b * nodes + n) * horizon + l] = values[(s + window + l) * nodes + n];
      }
    }
  }
  return {Tensor({B, nodes, window}, std::move(in)), Tensor({B, nodes, horizon}, std::move(tgt)),
          std::vector<std::size_t>(starts.begin(), starts.end())};
}

}  // namespace sdgl
