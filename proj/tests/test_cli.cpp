#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "kramers/reporting.hpp"

using namespace kramers;
namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "kramers_cli_test" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(KRAMERS_CLI_PATH) + " " + args + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

fs::path write_config(const fs::path& dir, const ordered_json& cfg) {
  const fs::path p = dir / "config.json";
  std::ofstream out(p);
  out << cfg.dump(2);
  return p;
}

// structural validation of the subset of JSON Schema the report schema uses:
// required, type (object/string), enum, additionalProperties: false
bool validates(const ordered_json& doc, const ordered_json& schema) {
  if (schema.contains("required")) {
    for (const auto& k : schema["required"]) {
      if (!doc.contains(k.get<std::string>())) return false;
    }
  }
  if (schema.contains("properties")) {
    for (const auto& [key, sub] : schema["properties"].items()) {
      if (!doc.contains(key)) continue;
      const auto& v = doc[key];
      if (sub.contains("type")) {
        const std::string t = sub["type"].get<std::string>();
        if (t == "object" && !v.is_object()) return false;
        if (t == "string" && !v.is_string()) return false;
      }
      if (sub.contains("enum")) {
        bool hit = false;
        for (const auto& e : sub["enum"]) hit = hit || e == v;
        if (!hit) return false;
      }
    }
    if (schema.contains("additionalProperties") &&
        schema["additionalProperties"] == false) {
      for (const auto& [key, _] : doc.items()) {
        if (!schema["properties"].contains(key)) return false;
      }
    }
  }
  return true;
}

ordered_json quadratic_config() {
  return ordered_json{
      {"objective",
       {{"name", "quadratic"},
        {"h", {{"rows", 2}, {"cols", 2}, {"data", {0.01, 0.0, 0.0, 1.0}}}},
        {"b1", {0.0, 0.0}},
        {"c1", 0.0}}},
      {"dynamics", {{"kind", "uld"}, {"gamma", 0.2}}},
      {"beta", 1.0},
      {"x0", {3.0, 3.0}},
      {"n_points", 120},
      {"seed", 5}};
}

}  // namespace

TEST_CASE("mixing subcommand writes valid outputs") {
  const fs::path dir = fresh_dir("mixing");
  const fs::path cfg = write_config(dir, quadratic_config());
  const int rc = run_cli("mixing --config " + cfg.string() + " --out " +
                         dir.string());
  CHECK(rc == 0);
  REQUIRE(fs::exists(dir / "results.csv"));
  REQUIRE(fs::exists(dir / "report.json"));
  REQUIRE(fs::exists(dir / "manifest.json"));

  std::ifstream rep_in(dir / "report.json");
  const auto report = ordered_json::parse(rep_in);
  std::ifstream schema_in(fs::path(KRAMERS_SCHEMA_DIR) / "report.schema.json");
  const auto schema = ordered_json::parse(schema_in);
  CHECK(validates(report, schema));
  CHECK(report["results"]["fit"]["rate"].get<double>() > 0.09);
  CHECK(report["results"]["fit"]["rate"].get<double>() < 0.11);

  std::ifstream csv(dir / "results.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header == "t,w2,bound,fitted_model");

  // manifest checksums match the files on disk
  std::ifstream man_in(dir / "manifest.json");
  const auto manifest = ordered_json::parse(man_in);
  CHECK(manifest["outputs"]["results.csv"] ==
        file_checksum(dir / "results.csv"));
}

TEST_CASE("identical config and seed give byte-identical results") {
  const fs::path d1 = fresh_dir("det1");
  const fs::path d2 = fresh_dir("det2");
  const fs::path cfg1 = write_config(d1, quadratic_config());
  const fs::path cfg2 = write_config(d2, quadratic_config());
  REQUIRE(run_cli("mixing --config " + cfg1.string() + " --out " + d1.string()) == 0);
  REQUIRE(run_cli("mixing --config " + cfg2.string() + " --out " + d2.string()) == 0);
  CHECK(file_checksum(d1 / "results.csv") == file_checksum(d2 / "results.csv"));
  CHECK(file_checksum(d1 / "report.json") == file_checksum(d2 / "report.json"));
}

TEST_CASE("gamma sweep results carry the argmax row") {
  const fs::path dir = fresh_dir("sweep");
  ordered_json cfg = quadratic_config();
  cfg.erase("dynamics");
  cfg["gamma_sweep"] = {0.1, 0.2, 0.3};
  cfg["n_points"] = 120;
  const fs::path p = write_config(dir, cfg);
  REQUIRE(run_cli("mixing --config " + p.string() + " --out " + dir.string()) == 0);
  std::ifstream rep_in(dir / "report.json");
  const auto report = ordered_json::parse(rep_in);
  CHECK(report["results"]["sweep"]["argmax_gamma"].get<double>() ==
        doctest::Approx(0.2));
}

TEST_CASE("config errors exit with status 2") {
  const fs::path dir = fresh_dir("bad");
  // empty config: missing required keys
  const fs::path empty = write_config(dir, ordered_json::object());
  CHECK(run_cli("mixing --config " + empty.string() + " --out " + dir.string()) == 2);
  // unknown key rejected
  ordered_json cfg = quadratic_config();
  cfg["typo_key"] = 1;
  const fs::path bad = write_config(dir, cfg);
  CHECK(run_cli("mixing --config " + bad.string() + " --out " + dir.string()) == 2);
  // missing file
  CHECK(run_cli("mixing --config /nonexistent.json --out " + dir.string()) == 2);
  // no subcommand is a usage error
  CHECK(run_cli("--config " + bad.string()) != 0);
}

TEST_CASE("numerical failures exit with status 3") {
  const fs::path dir = fresh_dir("numfail");
  // noiseless exit run: every path times out
  ordered_json cfg = {
      {"objective",
       {{"name", "double_well"}, {"dim", 1}, {"c", 1.0}, {"omega", ordered_json::array()}}},
      {"dynamics", {{"kind", "ld"}}},
      {"eta", 0.01},
      {"beta", 1e30},
      {"n_paths", 4},
      {"max_steps", 5000},
      {"seed", 1}};
  const fs::path p = write_config(dir, cfg);
  CHECK(run_cli("exit --config " + p.string() + " --out " + dir.string()) == 3);
}

TEST_CASE("constants subcommand emits the full ULD table") {
  const fs::path dir = fresh_dir("constants");
  ordered_json cfg = {
      {"params",
       {{"m", 0.01}, {"M", 1.0}, {"L", 1.0}, {"A", 1.0}, {"B", 1.0}, {"C", 1.0},
        {"b", 1.0}, {"d", 2}, {"r", 1.0}, {"eps", 0.05}, {"delta", 0.1},
        {"T", 10.0}, {"gamma", 0.2}, {"eta", 1e-4}, {"beta", 1e5},
        {"c_H", 4.040404040404041}}},
      {"mode", "uld-critical"},
      {"seed", 3}};
  const fs::path p = write_config(dir, cfg);
  REQUIRE(run_cli("constants --config " + p.string() + " --out " + dir.string()) == 0);
  std::ifstream rep_in(dir / "report.json");
  const auto report = ordered_json::parse(rep_in);
  const auto& table = report["results"]["table"];
  for (const char* key : {"eps_bar_U", "eta_bar_U", "beta_bar_U", "lambda",
                          "K2", "T_rec_U", "T_esc_U", "Cx_c", "Cv_d"}) {
    REQUIRE(table.contains(key));
    CHECK(table[key].get<double>() > 0.0);
  }
  CHECK(table["lambda"].get<double>() ==
        doctest::Approx(std::min(0.125, 0.01 / (2.0 + 0.04))));
}

TEST_CASE("exit subcommand CSV has the per-path schema") {
  const fs::path dir = fresh_dir("exitcsv");
  ordered_json cfg = {
      {"objective",
       {{"name", "double_well"}, {"dim", 1}, {"c", 1.0}, {"omega", ordered_json::array()}}},
      {"dynamics", {{"kind", "ld"}}},
      {"eta", 0.01},
      {"beta", 4.0},
      {"n_paths", 32},
      {"max_steps", 2000000},
      {"seed", 7},
      {"threads", 2}};
  const fs::path p = write_config(dir, cfg);
  REQUIRE(run_cli("exit --config " + p.string() + " --out " + dir.string()) == 0);
  std::ifstream csv(dir / "results.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header == "path,exit_steps,exit_time,exited_via");
  std::string row;
  std::getline(csv, row);
  CHECK(row.find(",a2") != std::string::npos);
}

TEST_CASE("classify subcommand counts verdicts and dumps a trajectory") {
  const fs::path dir = fresh_dir("classify");
  ordered_json cfg = {
      {"objective",
       {{"name", "quadratic"},
        {"h", {{"rows", 1}, {"cols", 1}, {"data", {0.25}}}},
        {"b1", {0.0}},
        {"c1", 0.0}}},
      {"params",
       {{"m", 0.25}, {"M", 0.25}, {"L", 0.0}, {"A", 0.0}, {"B", 0.0},
        {"C", 0.25}, {"b", 0.0}, {"d", 1}, {"r", 1.0}, {"eps", 0.9},
        {"delta", 0.1}, {"T", 1.0}, {"gamma", 1.0}}},
      {"mode", "uld-critical"},
      {"n_seeds", 4},
      {"start_distance", 0.0},
      {"trajectory_stride", 1000},
      {"seed", 77}};
  const fs::path p = write_config(dir, cfg);
  REQUIRE(run_cli("classify --config " + p.string() + " --out " + dir.string()) == 0);
  std::ifstream rep_in(dir / "report.json");
  const auto report = ordered_json::parse(rep_in);
  CHECK(report["results"]["fractions"]["neither"].get<double>() <= 0.1);
  REQUIRE(fs::exists(dir / "trajectory.csv"));
  std::ifstream csv(dir / "trajectory.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header == "step,x_0,v_0");
  std::ifstream man_in(dir / "manifest.json");
  const auto manifest = ordered_json::parse(man_in);
  CHECK(manifest["outputs"].contains("trajectory.csv"));
}

TEST_CASE("exit subcommand writes a histogram for plotting") {
  const fs::path dir = fresh_dir("exithist");
  ordered_json cfg = {
      {"objective",
       {{"name", "double_well"}, {"dim", 1}, {"c", 1.0}, {"omega", ordered_json::array()}}},
      {"dynamics", {{"kind", "ld"}}},
      {"eta", 0.01},
      {"beta", 4.0},
      {"n_paths", 64},
      {"max_steps", 2000000},
      {"seed", 7},
      {"threads", 2}};
  const fs::path p = write_config(dir, cfg);
  REQUIRE(run_cli("exit --config " + p.string() + " --out " + dir.string()) == 0);
  REQUIRE(fs::exists(dir / "histogram.csv"));
  std::ifstream csv(dir / "histogram.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header == "bin_left,count");
}

TEST_CASE("seed flag overrides the config seed") {
  const fs::path dir = fresh_dir("seedflag");
  ordered_json cfg = quadratic_config();
  const fs::path p = write_config(dir, cfg);
  REQUIRE(run_cli("mixing --config " + p.string() + " --out " + dir.string() +
                  " --seed 777") == 0);
  std::ifstream man_in(dir / "manifest.json");
  const auto manifest = ordered_json::parse(man_in);
  CHECK(manifest["seed"] == 777);
}
