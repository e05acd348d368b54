// mmcast: train, forecast and evaluate multi-model combination wind-power
// forecasts, and generate synthetic data.
//
// Exit codes: 0 success, 1 other failure, 2 configuration or usage error,
// 3 data error, 4 numerical error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "mmcast/config.hpp"
#include "mmcast/data.hpp"
#include "mmcast/error.hpp"
#include "mmcast/evaluation.hpp"
#include "mmcast/pipeline.hpp"
#include "mmcast/synthetic.hpp"

namespace {

enum ExitCode { kOk = 0, kOther = 1, kConfig = 2, kData = 3, kNumerical = 4 };

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  bool no_refine = false;
  std::string horizons;
  std::string data;
  std::string output_dir;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("-c,--config", o.config_path, "Run configuration (JSON)")->required();
  cmd->add_option("--seed", o.seed, "Override pso.seed");
  cmd->add_flag("--no-refine", o.no_refine, "Skip CRPS refinement (EM weights only)");
  cmd->add_option("--horizons", o.horizons, "Override horizons, e.g. 1-6,12,24");
  cmd->add_option("--data", o.data, "Override the data file");
  cmd->add_option("--output-dir", o.output_dir, "Override output_dir");
}

mmcast::RunConfig resolve_config(const CommonOptions& o) {
  mmcast::RunConfig config = mmcast::load_config(o.config_path);
  mmcast::ConfigOverrides overrides;
  overrides.seed = o.seed;
  overrides.no_refine = o.no_refine;
  if (!o.horizons.empty()) overrides.horizons = mmcast::parse_horizon_list(o.horizons);
  if (!o.data.empty()) overrides.data_path = o.data;
  if (!o.output_dir.empty()) overrides.output_dir = o.output_dir;
  mmcast::apply_overrides(config, overrides);
  return config;
}

template <class F>
int guarded(F&& f) {
  try {
    f();
    return kOk;
  } catch (const mmcast::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kConfig;
  } catch (const mmcast::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const mmcast::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kOther;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-model combination of probabilistic wind-power forecasts"};
  app.require_subcommand(1);

  CommonOptions train_opts;
  auto* train = app.add_subcommand("train", "Fit members on training set A and the combiner on training set B");
  add_common(train, train_opts);

  CommonOptions forecast_opts;
  std::vector<std::string> issue_times;
  std::string model_dir;
  std::string forecast_out;
  auto* forecast = app.add_subcommand("forecast", "Write predictive densities and quantile fans");
  add_common(forecast, forecast_opts);
  forecast->add_option("--issue-time", issue_times, "Issue time \"YYYYMMDD HH:00\" (repeatable)")->required();
  forecast->add_option("--model-dir", model_dir, "Trained model directory (default: output_dir)");
  forecast->add_option("-o,--out", forecast_out, "Output CSV (default: stdout)");

  CommonOptions evaluate_opts;
  std::string eval_model_dir;
  std::string eval_out;
  auto* evaluate = app.add_subcommand("evaluate", "Score MMC and member forecasts on the validation set");
  add_common(evaluate, evaluate_opts);
  evaluate->add_option("--model-dir", eval_model_dir, "Trained model directory (default: output_dir)");
  evaluate->add_option("-o,--out", eval_out, "Report directory (default: <model-dir>/evaluation)");

  mmcast::SyntheticConfig synth_config;
  std::string synth_out;
  std::size_t synth_hours = synth_config.hours;
  auto* synth = app.add_subcommand("synth-data", "Generate a seeded synthetic wind-farm dataset");
  synth->add_option("-o,--out", synth_out, "Output CSV")->required();
  synth->add_option("--seed", synth_config.seed, "Random seed");
  synth->add_option("--zone", synth_config.zone, "Zone identifier");
  synth->add_option("--hours", synth_hours, "Number of hourly records");
  synth->add_option("--missing-fraction", synth_config.missing_fraction, "Share of targets left blank");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  if (train->parsed()) {
    return guarded([&] { mmcast::run_train(resolve_config(train_opts), std::cerr); });
  }
  if (forecast->parsed()) {
    return guarded([&] {
      const mmcast::RunConfig config = resolve_config(forecast_opts);
      std::vector<mmcast::TimePoint> times;
      for (const auto& t : issue_times) {
        try {
          times.push_back(mmcast::parse_timestamp(t));
        } catch (const mmcast::Error& e) {
          throw mmcast::ConfigError(std::string("--issue-time: ") + e.what());
        }
      }
      const auto table = mmcast::run_forecast(config, model_dir.empty() ? config.output_dir : model_dir, times);
      if (forecast_out.empty()) {
        mmcast::write_csv(std::cout, table);
      } else {
        std::ofstream out(forecast_out);
        if (!out) throw mmcast::ConfigError("cannot write '" + forecast_out + "'");
        mmcast::write_csv(out, table);
      }
    });
  }
  if (evaluate->parsed()) {
    return guarded([&] {
      const mmcast::RunConfig config = resolve_config(evaluate_opts);
      const std::string dir = eval_model_dir.empty() ? config.output_dir : eval_model_dir;
      const std::string out =
          eval_out.empty() ? (std::filesystem::path(dir) / "evaluation").string() : eval_out;
      const auto reports = mmcast::run_evaluate(config, dir, out, std::cerr);
      mmcast::write_csv(std::cout, mmcast::comparison_table(reports));
    });
  }
  if (synth->parsed()) {
    return guarded([&] {
      synth_config.hours = synth_hours;
      const auto records = mmcast::generate_synthetic(synth_config);
      std::ofstream out(synth_out);
      if (!out) throw mmcast::ConfigError("cannot write '" + synth_out + "'");
      mmcast::write_records(out, records);
    });
  }
  return kOther;
}
