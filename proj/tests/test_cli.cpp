#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

// Drives the command-line binary end to end. SDGL_CLI and SDGL_CONFIGS are
// set by the build.

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const fs::path kWork = fs::temp_directory_path() / "sdgl_cli_test";

struct Run {
  int code;
  std::string out, err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Run run(const std::string& args) {
  const fs::path out = kWork / "stdout.txt", err = kWork / "stderr.txt";
  const std::string cmd = "cd '" + kWork.string() + "' && SDGL_LOG=quiet '" SDGL_CLI "' " + args +
                          " > '" + out.string() + "' 2> '" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

std::vector<std::vector<double>> read_matrix(const fs::path& p) {
  std::istringstream in(slurp(p));
  std::string line;
  std::getline(in, line);  // header
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

std::size_t count_lines(const fs::path& p) {
  const std::string s = slurp(p);
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

struct Workspace {
  Workspace() {
    fs::remove_all(kWork);
    fs::create_directories(kWork);
  }
};

const std::string kSmallCfg = std::string(SDGL_CONFIGS) + "/small.cfg";

}  // namespace

TEST_CASE("usage and missing-file errors exit with code 2") {
  Workspace w;
  Run r = run("train --data missing.csv");
  CHECK(r.code == 2);
  CHECK(r.err.find("missing.csv") != std::string::npos);
  r = run("eval --checkpoint nope.sdgl --data missing.csv");
  CHECK(r.code == 2);
  CHECK(r.err.find("nope.sdgl") != std::string::npos);
  CHECK(run("").code == 2);
  CHECK(run("train").code == 2);
  CHECK(run("synth --alpha 1.5 --out-dir s").code == 2);
  CHECK(run("synth --nodes 4 --steps 100 --out-dir s").code == 0);
  r = run("train --data s/data.csv --ablate bogus");
  CHECK(r.code == 2);
  r = run("train --data s/data.csv --set learning_rate=-1");
  CHECK(r.code == 2);
  CHECK(r.err.find("learning_rate") != std::string::npos);
  r = run("train --data s/data.csv --layers 3 --window 19");
  CHECK(r.code == 2);
  CHECK(r.err.find("window") != std::string::npos);
  CHECK(run("--help").code == 0);
}

TEST_CASE("synth writes data, truth and schedule deterministically") {
  Workspace w;
  REQUIRE(run("synth --nodes 8 --steps 512 --seed 1 --out-dir a").code == 0);
  REQUIRE(run("synth --nodes 8 --steps 512 --seed 1 --out-dir b").code == 0);
  CHECK(count_lines(kWork / "a/data.csv") == 513);
  const auto truth = read_matrix(kWork / "a/truth.csv");
  REQUIRE(truth.size() == 8);
  for (const auto& row : truth) CHECK(row.size() == 8);
  CHECK(read_matrix(kWork / "a/data.csv")[0].size() == 8);
  CHECK(slurp(kWork / "a/data.csv") == slurp(kWork / "b/data.csv"));
  CHECK(slurp(kWork / "a/truth.csv") == slurp(kWork / "b/truth.csv"));
  const json ma = json::parse(slurp(kWork / "a/synth_manifest.json"));
  const json mb = json::parse(slurp(kWork / "b/synth_manifest.json"));
  CHECK(ma["outputs"]["data_sha256"] == mb["outputs"]["data_sha256"]);
  CHECK(ma["spec"]["nodes"] == 8);

  REQUIRE(run("synth --nodes 6 --steps 100 --alpha 0 --noise 0 --out-dir z").code == 0);
  CHECK(fs::exists(kWork / "z/truth.csv"));
  for (const auto& row : read_matrix(kWork / "z/data.csv"))
    for (double v : row) CHECK(v == row[0]);

  REQUIRE(run("synth --nodes 6 --steps 100 --switch-every 20 --switch-length 5 --out-dir sw").code == 0);
  const json sched = json::parse(slurp(kWork / "sw/schedule.json"));
  CHECK(sched["intervals"].size() == 5);
  CHECK(sched["intervals"][0]["begin"] == 15);
}

TEST_CASE("train, eval and export-graphs") {
  Workspace w;
  REQUIRE(run("synth --nodes 8 --steps 512 --seed 1 --noise 0.05 --out-dir s").code == 0);
  const std::string common = "--data s/data.csv --config '" + kSmallCfg + "' --seed 7 --epochs 2";
  REQUIRE(run("train " + common + " --out-dir t1").code == 0);
  REQUIRE(run("train " + common + " --out-dir t2").code == 0);
  CHECK(slurp(kWork / "t1/checkpoint.sdgl") == slurp(kWork / "t2/checkpoint.sdgl"));
  const json m1 = json::parse(slurp(kWork / "t1/train_manifest.json"));
  const json m2 = json::parse(slurp(kWork / "t2/train_manifest.json"));
  CHECK(m1["outputs"]["checkpoint_sha256"] == m2["outputs"]["checkpoint_sha256"]);
  CHECK(m1["config"]["learning_rate"] == "0.01");
  CHECK(m1["config"]["seed"] == "7");
  CHECK(count_lines(kWork / "t1/metrics.csv") == 3);

  // The manifest's reproduce line rebuilds the same checkpoint.
  REQUIRE(run("train --data s/data.csv --config t1/config.cfg --out-dir t3").code == 0);
  CHECK(slurp(kWork / "t3/checkpoint.sdgl") == slurp(kWork / "t1/checkpoint.sdgl"));

  REQUIRE(run("train " + common + " --ablate no_dyadj --out-dir nd").code == 0);
  const json mnd = json::parse(slurp(kWork / "nd/train_manifest.json"));
  CHECK(mnd["config"]["ablate"] == "no_dyadj");

  const Run js = run("eval --checkpoint t1/checkpoint.sdgl --data s/data.csv --format json --out-dir e");
  REQUIRE(js.code == 0);
  const json report = json::parse(js.out);
  const std::string text = slurp(kWork / "e/eval_metrics.txt");
  CHECK(report == json::parse(slurp(kWork / "e/eval_metrics.json")));
  const std::size_t horizon = report["per_horizon"].size();
  CHECK(horizon == 3);
  double sum = 0.0;
  for (std::size_t l = 0; l < horizon; ++l) {
    for (const char* key : {"mae", "rmse", "mape", "rse", "corr"}) {
      const std::string needle = "horizon_" + std::to_string(l + 1) + "." + key + ": ";
      const auto pos = text.find(needle);
      REQUIRE(pos != std::string::npos);
      const double from_text = std::stod(text.substr(pos + needle.size()));
      CHECK(from_text == report["per_horizon"][l][key].get<double>());
    }
    sum += report["per_horizon"][l]["mae"].get<double>();
  }
  CHECK(std::fabs(report["average"]["mae"].get<double>() - sum / 3.0) <= 1e-12);
  const auto pos = text.find("average.mae: ");
  REQUIRE(pos != std::string::npos);
  CHECK(std::stod(text.substr(pos + 13)) == report["average"]["mae"].get<double>());
  CHECK(run("eval --checkpoint t1/checkpoint.sdgl --data s/data.csv --out-dir e2").out == text);

  REQUIRE(run("synth --nodes 5 --steps 100 --out-dir other").code == 0);
  CHECK(run("eval --checkpoint t1/checkpoint.sdgl --data other/data.csv").code != 0);

  REQUIRE(run("export-graphs --checkpoint t1/checkpoint.sdgl --data s/data.csv --windows 0,100-101 --out-dir g").code == 0);
  const auto a = read_matrix(kWork / "g/static.csv");
  REQUIRE(a.size() == 8);
  for (const auto& row : a) {
    double s = 0;
    for (double v : row) {
      CHECK(v > 0.0);
      s += v;
    }
    CHECK(std::fabs(s - 1.0) <= 1e-9);
  }
  // Threshold 1/N keeps exactly the entries at or above uniform.
  std::size_t expected = 0;
  for (const auto& row : a)
    for (double v : row) expected += v >= 1.0 / 8.0;
  const auto edges = read_matrix(kWork / "g/static_edges.csv");
  CHECK(edges.size() == expected);
  for (const auto& e : edges) CHECK(e[2] >= 1.0 / 8.0);

  const auto d100 = read_matrix(kWork / "g/dynamic_100.csv");
  const auto d101 = read_matrix(kWork / "g/dynamic_101.csv");
  const auto d0 = read_matrix(kWork / "g/dynamic_0.csv");
  double near = 0, row_err = 0;
  for (std::size_t i = 0; i < 8; ++i) {
    double s = 0;
    for (std::size_t j = 0; j < 8; ++j) {
      near += (d100[i][j] - d101[i][j]) * (d100[i][j] - d101[i][j]);
      s += d100[i][j];
    }
    row_err = std::max(row_err, std::fabs(s - 1.0));
  }
  CHECK(row_err <= 1e-9);
  // Adjacent windows share h-1 steps; their graphs stay close.
  CHECK(std::sqrt(near) < 0.1);
  CHECK(d0.size() == 8);

  const Run bad = run("export-graphs --checkpoint t1/checkpoint.sdgl --data s/data.csv --windows 9999 --out-dir g2");
  CHECK(bad.code == 2);
  CHECK(bad.err.find("9999") != std::string::npos);
  CHECK(run("export-graphs --checkpoint nd/checkpoint.sdgl --data s/data.csv --windows 0 --out-dir g3").code == 1);
}
