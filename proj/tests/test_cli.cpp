#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "casekin/cli.hpp"
#include "casekin/csv.hpp"
#include "casekin/types.hpp"

using namespace casekin;
namespace fs = std::filesystem;

namespace {

const fs::path& work_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "casekin_cli_tests";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    lines.push_back(line);
  }
  return lines;
}

std::vector<std::vector<double>> parse_rows(const std::string& text) {
  std::vector<std::vector<double>> rows;
  const auto lines = lines_of(text);
  for (std::size_t i = 2; i < lines.size(); ++i) {  // skip fingerprint + header
    std::vector<double> row;
    std::istringstream in(lines[i]);
    std::string field;
    while (std::getline(in, field, '\t')) {
      row.push_back(std::stod(field));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

bool contains(const std::string& hay, const std::string& needle) {
  return hay.find(needle) != std::string::npos;
}

RunConfig base_config() {
  RunConfig cfg;
  cfg.s_points = 41;
  cfg.u_points = 80;
  return cfg;
}

//! Simulate a shared small dataset once; every command test reads it.
const std::string& sim_csv() {
  static const std::string path = [] {
    RunConfig cfg = base_config();
    cfg.command = "simulate";
    cfg.n1 = 60;
    cfg.seed = 42;
    cfg.output_path = (work_dir() / "shared.csv").string();
    std::ostringstream out;
    std::ostringstream err;
    REQUIRE(run_command(cfg, out, err) == 0);
    REQUIRE(err.str().empty());
    return cfg.output_path;
  }();
  return path;
}

}  // namespace

TEST_CASE("simulate writes a parsable cohort and its true curve") {
  const std::string csv_path = sim_csv();
  REQUIRE(fs::exists(csv_path));
  REQUIRE(fs::exists(csv_path + ".truth.tsv"));

  const Dataset ds = parse_csv_file(csv_path);
  CHECK(ds.n1 == 60);
  CHECK(ds.n0 == 60);
  CHECK(ds.size() == 120);

  const std::string truth = slurp(csv_path + ".truth.tsv");
  const auto lines = lines_of(truth);
  REQUIRE(lines.size() > 3);
  CHECK(lines[0].rfind("# casekin simulate frailty=gamma", 0) == 0);
  CHECK(contains(lines[0], "n1=60"));
  CHECK(contains(lines[0], "seed=42"));
  CHECK(lines[1] == "age\tsurvival");
  const auto rows = parse_rows(truth);
  CHECK(rows.front()[0] == 0.0);
  CHECK(rows.front()[1] == 1.0);
  CHECK(rows.back()[1] < 1.0);

  // The console report summarizes the cohort.
  RunConfig cfg = base_config();
  cfg.command = "simulate";
  cfg.n1 = 25;
  cfg.ratio = 2;
  cfg.seed = 43;
  cfg.output_path = (work_dir() / "other.csv").string();
  std::ostringstream out;
  std::ostringstream err;
  REQUIRE(run_command(cfg, out, err) == 0);
  CHECK(contains(out.str(), "wrote 75 families (25 case / 50 control)"));
  CHECK(contains(out.str(), "wrote true marginal curve to "));
}

TEST_CASE("estimate with a fixed bandwidth writes a deterministic table") {
  RunConfig cfg = base_config();
  cfg.command = "estimate";
  cfg.input_path = sim_csv();
  cfg.bandwidth = "0.8";
  cfg.seed = 7;
  cfg.output_path = (work_dir() / "est1.tsv").string();
  std::ostringstream out;
  std::ostringstream err;
  REQUIRE(run_command(cfg, out, err) == 0);
  CHECK(err.str().empty());
  CHECK(contains(out.str(), "wrote"));
  CHECK(contains(out.str(), "rows to " + cfg.output_path));

  const std::string text = slurp(cfg.output_path);
  const auto lines = lines_of(text);
  REQUIRE(lines.size() > 4);
  CHECK(lines[0].rfind("# casekin estimate bandwidth=0.8", 0) == 0);
  CHECK(!contains(lines[0], "(auto)"));
  CHECK(contains(lines[0], "s_points=41"));
  CHECK(lines[1] == "age\tcum_hazard\tsurvival\tsurvival_bounded");

  const auto rows = parse_rows(text);
  REQUIRE(rows.size() >= 2);
  double prev_age = -1.0;
  double prev_bounded = 2.0;
  for (const auto& row : rows) {
    REQUIRE(row.size() == 4);
    CHECK(row[0] > prev_age);
    prev_age = row[0];
    CHECK(row[3] >= 0.0);
    CHECK(row[3] <= 1.0);
    CHECK(row[3] <= prev_bounded + 1e-12);
    prev_bounded = row[3];
  }

  // Same invocation, different file: byte-identical output.
  cfg.output_path = (work_dir() / "est2.tsv").string();
  std::ostringstream out2;
  REQUIRE(run_command(cfg, out2, err) == 0);
  CHECK(slurp(cfg.output_path) == text);
}

TEST_CASE("estimate can pick its own bandwidth") {
  RunConfig cfg = base_config();
  cfg.command = "estimate";
  cfg.input_path = sim_csv();
  cfg.bandwidth = "auto";
  cfg.b_inner = 6;
  cfg.seed = 11;
  cfg.output_path = (work_dir() / "est_auto.tsv").string();
  std::ostringstream out;
  std::ostringstream err;
  REQUIRE(run_command(cfg, out, err) == 0);
  CHECK(contains(out.str(), "selected bandwidth "));

  const auto lines = lines_of(slurp(cfg.output_path));
  REQUIRE(!lines.empty());
  CHECK(contains(lines[0], "(auto)"));
}

TEST_CASE("select-bandwidth reports both stages of the search") {
  RunConfig cfg = base_config();
  cfg.command = "select-bandwidth";
  cfg.input_path = sim_csv();
  cfg.b_inner = 6;
  cfg.seed = 19;
  cfg.output_path = (work_dir() / "select.tsv").string();
  std::ostringstream out;
  std::ostringstream err;
  REQUIRE(run_command(cfg, out, err) == 0);
  CHECK(contains(out.str(), "selected bandwidth "));

  const std::string text = slurp(cfg.output_path);
  const auto lines = lines_of(text);
  REQUIRE(lines.size() > 3);
  CHECK(lines[0].rfind("# casekin select-bandwidth chosen=", 0) == 0);
  CHECK(contains(lines[0], "b_inner=6"));
  CHECK(lines[1] == "stage\tbandwidth\timse");

  const auto rows = parse_rows(text);
  std::size_t coarse = 0;
  std::size_t refined = 0;
  for (const auto& row : rows) {
    REQUIRE(row.size() == 3);
    if (row[0] == 1.0) {
      ++coarse;
    } else if (row[0] == 2.0) {
      ++refined;
    }
    CHECK(row[1] > 0.0);
    CHECK(row[1] <= 1.0);
  }
  CHECK(coarse == 10);  // default coarse ladder 0.1 .. 1.0
  CHECK(refined >= 1);
  CHECK(refined <= 3);
  CHECK(coarse + refined == rows.size());
}

TEST_CASE("ci writes percentile bands around the bounded curve") {
  RunConfig cfg = base_config();
  cfg.command = "ci";
  cfg.input_path = sim_csv();
  cfg.bandwidth = "0.8";
  cfg.b_outer = 12;
  cfg.level = 0.9;
  cfg.seed = 23;
  cfg.output_path = (work_dir() / "ci.tsv").string();
  std::ostringstream out;
  std::ostringstream err;
  REQUIRE(run_command(cfg, out, err) == 0);

  const std::string text = slurp(cfg.output_path);
  const auto lines = lines_of(text);
  REQUIRE(lines.size() > 3);
  CHECK(lines[0].rfind("# casekin ci bandwidth=0.8", 0) == 0);
  CHECK(contains(lines[0], "level=0.9"));
  CHECK(contains(lines[0], "b_outer=12"));
  CHECK(contains(lines[0], "succeeded="));
  CHECK(lines[1] == "age\tsurvival_bounded\tci_lower\tci_upper");

  for (const auto& row : parse_rows(text)) {
    REQUIRE(row.size() == 4);
    CHECK(row[2] <= row[3] + 1e-15);
    CHECK(row[2] >= 0.0);
    CHECK(row[3] <= 1.0);
  }
}

TEST_CASE("estimate appends band columns when asked for intervals") {
  RunConfig cfg = base_config();
  cfg.command = "estimate";
  cfg.input_path = sim_csv();
  cfg.bandwidth = "0.8";
  cfg.with_ci = true;
  cfg.b_outer = 12;
  cfg.level = 0.9;
  cfg.seed = 29;
  cfg.output_path = (work_dir() / "est_ci.tsv").string();
  std::ostringstream out;
  std::ostringstream err;
  REQUIRE(run_command(cfg, out, err) == 0);

  const std::string text = slurp(cfg.output_path);
  const auto lines = lines_of(text);
  REQUIRE(lines.size() > 3);
  CHECK(contains(lines[0], "ci_level=0.9"));
  CHECK(lines[1] == "age\tcum_hazard\tsurvival\tsurvival_bounded\tci_lower\tci_upper");
  for (const auto& row : parse_rows(text)) {
    REQUIRE(row.size() == 6);
    CHECK(row[4] <= row[5] + 1e-15);
  }
}

TEST_CASE("oracle-check validates the estimand pipeline against closed forms") {
  RunConfig cfg;  // default grid sizes: the published operating point
  cfg.command = "oracle-check";
  cfg.frailty = "gamma";
  cfg.tau = 0.5;
  cfg.event_rate = 0.6;
  std::ostringstream out;
  std::ostringstream err;
  REQUIRE(run_command(cfg, out, err) == 0);
  CHECK(contains(out.str(), "max |cum-hazard error| over [0, 110]:"));
  CHECK(contains(out.str(), "PASS (threshold 1e-3)"));
}

TEST_CASE("command errors use distinct exit codes") {
  std::ostringstream out;
  std::ostringstream err;

  RunConfig unknown;
  unknown.command = "frobnicate";
  CHECK(run_command(unknown, out, err) == 2);
  CHECK(contains(err.str(), "unknown command 'frobnicate'"));

  err.str("");
  RunConfig missing = base_config();
  missing.command = "estimate";
  missing.input_path = (work_dir() / "does_not_exist.csv").string();
  missing.bandwidth = "0.8";
  CHECK(run_command(missing, out, err) == 1);
  CHECK(err.str().rfind("error: ", 0) == 0);

  err.str("");
  RunConfig bad_h = base_config();
  bad_h.command = "estimate";
  bad_h.input_path = sim_csv();
  bad_h.bandwidth = "1.5";
  CHECK(run_command(bad_h, out, err) == 1);
  CHECK(contains(err.str(), "(0, 1]"));

  err.str("");
  RunConfig bad_word = base_config();
  bad_word.command = "estimate";
  bad_word.input_path = sim_csv();
  bad_word.bandwidth = "wide";
  CHECK(run_command(bad_word, out, err) == 1);
  CHECK(contains(err.str(), "must be a number or 'auto'"));

  err.str("");
  RunConfig bad_kind = base_config();
  bad_kind.command = "simulate";
  bad_kind.frailty = "uniform";
  bad_kind.output_path = (work_dir() / "never.csv").string();
  CHECK(run_command(bad_kind, out, err) == 1);
  CHECK(contains(err.str(), "unknown frailty family"));
}
