#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "doctest.h"
#include "mmcast/density_io.hpp"
#include "mmcast/error.hpp"
#include "mmcast/model_io.hpp"
#include "mmcast/pipeline.hpp"
#include "mmcast/synthetic.hpp"
#include "support.hpp"

using namespace mmcast;
namespace fs = std::filesystem;

namespace {

std::map<std::string, std::string> snapshot(const std::string& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::ifstream in(e.path(), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    files[e.path().filename().string()] = ss.str();
  }
  return files;
}

// Trains horizons 1 and 2 once on a synthetic year and keeps the result for
// every test case in this file.
struct Fixture {
  testing::TempDir dir{"pipeline"};
  std::vector<RawRecord> records;
  RunConfig config;
  std::map<std::string, std::string> first;
  std::map<std::string, std::string> second;

  Fixture() {
    records = generate_synthetic();
    {
      std::ofstream out(dir.str("wind.csv"));
      write_records(out, records);
    }
    config.data_path = dir.str("wind.csv");
    config.horizons = {1, 2};
    config.output_dir = dir.str("models");
    std::ostringstream log;
    run_train(config, log);
    first = snapshot(config.output_dir);
    run_train(config, log);
    second = snapshot(config.output_dir);
  }
};

Fixture& fixture() {
  static Fixture f;
  return f;
}

}  // namespace

TEST_CASE("training writes the model files") {
  const auto& f = fixture();
  std::vector<std::string> names;
  for (const auto& [name, _] : f.first) names.push_back(name);
  CHECK(names == std::vector<std::string>{"bde_h01.json", "bde_h02.json", "ckde_h01.json", "ckde_h02.json",
                                          "mmc_h01.json", "mmc_h02.json", "sbl_h01.json", "sbl_h02.json",
                                          "train_log.json"});
  const auto mmc = read_json_file(model_file(f.config.output_dir, "mmc", 1));
  CHECK(mmc.at("refined") == true);
  double total = 0.0;
  for (double w : mmc.at("weights")) {
    CHECK(w >= 0.0);
    total += w;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  const auto log = read_json_file(f.dir.str("models/train_log.json"));
  CHECK(log.at("horizons").size() == 2);
  CHECK(log.at("horizons")[0].at("samples").at("validation") == 720);
}

TEST_CASE("training twice gives byte-identical files") {
  const auto& f = fixture();
  REQUIRE(f.first.size() == f.second.size());
  for (const auto& [name, bytes] : f.first) {
    CAPTURE(name);
    CHECK(f.second.at(name) == bytes);
  }
}

TEST_CASE("reloaded models reproduce the stored combination") {
  const auto& f = fixture();
  const HorizonModels m = load_horizon_models(f.config.output_dir, 1);
  const auto mmc = read_json_file(model_file(f.config.output_dir, "mmc", 1));
  CHECK(m.final_model.weights == mmc.at("weights").get<std::vector<double>>());
  CHECK(m.final_model.variance == mmc.at("variance").get<double>());
  CHECK(m.em_model.weights == mmc.at("em").at("weights").get<std::vector<double>>());
  CHECK(m.final_model.members.size() == 3);
}

TEST_CASE("forecast rows match the reloaded members") {
  const auto& f = fixture();
  const std::vector<TimePoint> times{parse_timestamp("20121205 00:00"), parse_timestamp("20121210 06:00"),
                                     parse_timestamp("20121220 18:00")};
  const Table t = run_forecast(f.config, f.config.output_dir, times);
  CHECK(t.header == forecast_header());
  REQUIRE(t.rows.size() == times.size() * f.config.horizons.size());

  std::map<int, HorizonModels> models;
  for (int h : f.config.horizons) models.emplace(h, load_horizon_models(f.config.output_dir, h));
  std::size_t r = 0;
  for (TimePoint time : times) {
    for (int h : f.config.horizons) {
      const auto& row = t.rows[r++];
      CHECK(row[0] == format_timestamp(time));
      CHECK(std::stoi(row[1]) == h);
      for (int q = 1; q < kForecastQuantiles; ++q) CHECK(std::stod(row[4 + q]) >= std::stod(row[3 + q]));

      const auto& m = models.at(h);
      const auto x = m.scaler.apply(*build_features(f.records, time, h));
      double mean = 0.0;
      for (std::size_t k = 0; k < 3; ++k) {
        mean += m.final_model.weights[k] * mean_of(m.final_model.members[k]->predict(x, m.final_model.variance));
      }
      CHECK(std::stod(row[2]) == doctest::Approx(mean).epsilon(1e-9));
      const auto d = density_from_json(nlohmann::json::parse(row.back()));
      CHECK(mean_of(d) == doctest::Approx(mean).epsilon(1e-9));
    }
  }
}

TEST_CASE("forecast errors") {
  const auto& f = fixture();
  CHECK_THROWS_AS(run_forecast(f.config, f.config.output_dir, {}), ConfigError);
  RunConfig other = f.config;
  other.horizons = {5};
  CHECK_THROWS(run_forecast(other, f.config.output_dir, {parse_timestamp("20121205 00:00")}));
  // an issue time before the lag window has no features
  CHECK_THROWS_AS(run_forecast(f.config, f.config.output_dir, {parse_timestamp("20120101 01:00")}), DataError);
}

TEST_CASE("evaluation reports and tables") {
  const auto& f = fixture();
  std::ostringstream log;
  const std::string out = f.dir.str("eval");
  const auto reports = run_evaluate(f.config, f.config.output_dir, out, log);
  REQUIRE(reports.size() == kReportModels.size());
  for (std::size_t i = 0; i < reports.size(); ++i) {
    CHECK(reports[i].model == kReportModels[i]);
    CHECK(reports[i].horizons.size() == 2);
    CHECK(fs::exists(out + "/report_" + kReportModels[i] + ".json"));
    const auto back = report_from_json(read_json_file(out + "/report_" + kReportModels[i] + ".json"));
    CHECK(back.crps == reports[i].crps);
  }
  const std::map<std::string, std::size_t> rows{{"comparison.csv", 5},
                                                {"reliability_by_rate.csv", 45},
                                                {"sharpness_by_rate.csv", 45},
                                                {"crps_by_horizon.csv", 10},
                                                {"reliability_by_horizon.csv", 90},
                                                {"sharpness_by_horizon.csv", 90}};
  for (const auto& [name, count] : rows) {
    CAPTURE(name);
    std::ifstream in(out + "/" + name);
    REQUIRE(in);
    CHECK(read_csv(in).rows.size() == count);
  }
}

TEST_CASE("disabling refinement keeps the em solution") {
  const auto& f = fixture();
  RunConfig c = f.config;
  c.horizons = {1};
  c.refine = false;
  c.output_dir = f.dir.str("plain");
  std::ostringstream log;
  run_train(c, log);
  const auto mmc = read_json_file(model_file(c.output_dir, "mmc", 1));
  CHECK(mmc.at("refined") == false);
  CHECK(mmc.at("weights") == mmc.at("em").at("weights"));
  CHECK(mmc.at("variance") == mmc.at("em").at("variance"));
}

TEST_CASE("data file problems") {
  const auto& f = fixture();
  RunConfig c = f.config;
  c.data_path = f.dir.str("nope.csv");
  std::ostringstream log;
  CHECK_THROWS_AS(run_train(c, log), ConfigError);
  {
    std::ofstream out(c.data_path);
    out << "ZONEID,TIMESTAMP,TARGETVAR,U10,V10,U100,V100\n1,20120101 1:00,2.0,1,1,1,1\n";
  }
  CHECK_THROWS_AS(run_train(c, log), DataError);
  c.zone = 7;
  CHECK_THROWS_AS(run_train(c, log), DataError);
}
