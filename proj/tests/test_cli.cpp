#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "mmcast/evaluation.hpp"
#include "mmcast/pipeline.hpp"
#include "support.hpp"

#ifndef MMCAST_CLI_PATH
#error "MMCAST_CLI_PATH must name the command-line binary"
#endif

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string("\"") + MMCAST_CLI_PATH + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

std::string q(const std::string& s) { return "\"" + s + "\""; }

}  // namespace

TEST_CASE("usage errors exit with code 2") {
  CHECK(run("--help") == 0);
  CHECK(run("") == 2);
  CHECK(run("bogus") == 2);
  CHECK(run("train") == 2);
  CHECK(run("synth-data") == 2);
}

TEST_CASE("configuration and data errors") {
  mmcast::testing::TempDir dir("cli_errors");
  CHECK(run("train -c " + q(dir.str("missing.json"))) == 2);
  write_file(dir.str("unknown.json"), R"({"data": "wind.csv", "colour": "blue"})");
  CHECK(run("train -c " + q(dir.str("unknown.json"))) == 2);
  write_file(dir.str("run.json"), R"({"data": "wind.csv", "horizons": "1"})");
  CHECK(run("train -c " + q(dir.str("run.json")) + " --horizons 0") == 2);
  write_file(dir.str("wind.csv"), "ZONEID,TIMESTAMP,TARGETVAR,U10,V10,U100,V100\n1,20120101 1:00,1.7,1,1,1,1\n");
  CHECK(run("train -c " + q(dir.str("run.json"))) == 3);
  CHECK(run("forecast -c " + q(dir.str("run.json")) + " --issue-time \"not a time\"") == 2);
}

TEST_CASE("synth, train, forecast and evaluate from the command line") {
  mmcast::testing::TempDir dir("cli_run");
  REQUIRE(run("synth-data --seed 3 -o " + q(dir.str("wind.csv"))) == 0);
  write_file(dir.str("run.json"), R"({"data": "wind.csv", "horizons": "1", "output_dir": "models",
                                      "pso": {"iterations": 10}})");
  const std::string cfg = "-c " + q(dir.str("run.json"));
  REQUIRE(run("train " + cfg) == 0);
  CHECK(std::filesystem::exists(dir.str("models/mmc_h01.json")));

  REQUIRE(run("forecast " + cfg + " --issue-time \"20121215 00:00\" --issue-time \"20121216 12:00\" -o " +
              q(dir.str("fc.csv"))) == 0);
  std::ifstream fc(dir.str("fc.csv"));
  const auto table = mmcast::read_csv(fc);
  CHECK(table.header == mmcast::forecast_header());
  CHECK(table.rows.size() == 2);

  REQUIRE(run("evaluate " + cfg + " -o " + q(dir.str("eval"))) == 0);
  std::ifstream cmp(dir.str("eval/comparison.csv"));
  CHECK(mmcast::read_csv(cmp).rows.size() == mmcast::kReportModels.size());

  // models for a horizon that was never trained
  CHECK(run("forecast " + cfg + " --horizons 4 --issue-time \"20121215 00:00\"") != 0);
}
