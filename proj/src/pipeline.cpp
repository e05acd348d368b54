#include "mmcast/pipeline.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>

#include "mmcast/density_io.hpp"
#include "mmcast/error.hpp"
#include "mmcast/model_io.hpp"

namespace mmcast {

namespace {

namespace fs = std::filesystem;

// Runs f and rethrows library errors with the stage name prefixed, keeping
// the error category.
template <class F>
auto stage(const std::string& name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ConfigError& e) {
    throw ConfigError(name + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(name + ": " + e.what());
  } catch (const DegenerateError& e) {
    throw DegenerateError(name + ": " + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(name + ": " + e.what());
  } catch (const DomainError& e) {
    throw DomainError(name + ": " + e.what());
  }
}

std::vector<RawRecord> load_zone(const std::string& path, int zone) {
  std::vector<RawRecord> records = select_zone(load_records(path), zone);
  if (records.empty()) throw DataError("no records for zone " + std::to_string(zone) + " in '" + path + "'");
  return records;
}

nlohmann::json split_to_json(const SplitBoundaries& b) {
  nlohmann::json j = {{"train_a_end", format_timestamp(b.train_a_end)}, {"train_b_end", format_timestamp(b.train_b_end)}};
  if (b.validation_end) j["validation_end"] = format_timestamp(*b.validation_end);
  return j;
}

SplitBoundaries split_from_json(const nlohmann::json& j) {
  SplitBoundaries b;
  b.train_a_end = parse_timestamp(j.at("train_a_end").get<std::string>());
  b.train_b_end = parse_timestamp(j.at("train_b_end").get<std::string>());
  if (j.contains("validation_end")) b.validation_end = parse_timestamp(j.at("validation_end").get<std::string>());
  return b;
}

std::string member_file_name(const std::string& kind, int horizon) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s_h%02d.json", kind.c_str(), horizon);
  return buf;
}

std::vector<std::shared_ptr<const Member>> member_list(const HorizonModels& m) { return {m.sbl, m.ckde, m.bde}; }

std::string quantile_label(int i) {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "q%02d", 5 * (i + 1));
  return buf;
}

void write_table(const std::string& path, const Table& t) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  write_csv(out, t);
}

}  // namespace

DatasetSplit horizon_split(const std::vector<RawRecord>& zone_records, int horizon, const RunConfig& config,
                           SampleSet* all) {
  SampleSet set = build_samples(zone_records, horizon, config.lags);
  DatasetSplit split = split_dataset(set.samples, config.split);
  if (all) *all = std::move(set);
  return split;
}

std::string model_file(const std::string& dir, const std::string& kind, int horizon) {
  return (fs::path(dir) / member_file_name(kind, horizon)).string();
}

void run_train(const RunConfig& config, std::ostream& log) {
  validate_config(config);
  const auto records = stage("load data", [&] { return load_zone(config.data_path, config.zone); });
  stage("create output directory", [&] {
    std::error_code ec;
    fs::create_directories(config.output_dir, ec);
    if (ec) throw ConfigError("cannot create '" + config.output_dir + "': " + ec.message());
    return 0;
  });

  nlohmann::json train_log = {{"data", config.data_path}, {"zone", config.zone}, {"config", config_to_json(config)}};
  train_log["horizons"] = nlohmann::json::array();

  for (int h : config.horizons) {
    const std::string tag = "horizon " + std::to_string(h);
    SampleSet all;
    const DatasetSplit split = stage(tag + " split", [&] { return horizon_split(records, h, config, &all); });
    const FeatureScaler scaler = stage(tag + " scaler", [&] { return FeatureScaler::fit(split.train_a); });
    const std::vector<Sample> a = scaler.apply(split.train_a);
    const std::vector<Sample> b = scaler.apply(split.train_b);
    const Eigen::MatrixXd xa = feature_matrix(a);
    const std::vector<double> ya = target_values(a);
    const Eigen::VectorXd ya_vec = Eigen::Map<const Eigen::VectorXd>(ya.data(), static_cast<Eigen::Index>(ya.size()));

    log << tag << ": fitting members on " << a.size() << " samples\n" << std::flush;
    auto sbl = std::make_shared<const SblMember>(stage(tag + " sbl fit", [&] { return sbl_fit(xa, ya_vec, config.sbl); }));
    auto ckde = std::make_shared<const CkdeMember>(stage(tag + " ckde fit", [&] { return ckde_fit(xa, ya, config.ckde); }));
    auto spot = std::make_shared<const KernelRidgeForecaster>(
        stage(tag + " bde fit", [&] { return spot_fit(xa, ya_vec, config.bde); }));
    auto bde = std::make_shared<const BdeMember>(spot);
    const std::vector<std::shared_ptr<const Member>> members{sbl, ckde, bde};

    log << tag << ": estimating weights on " << b.size() << " samples\n" << std::flush;
    const MemberPanel panel =
        stage(tag + " combiner panel", [&] { return build_panel(members, feature_matrix(b), target_values(b)); });
    const EmResult em = stage(tag + " em", [&] { return em_fit(panel, config.em); });
    PsoConfig pso = config.pso;
    if (!config.refine) pso.iterations = 0;
    const RefineResult refined =
        stage(tag + " crps refinement", [&] { return crps_refine(panel, em.weights, em.variance, pso); });

    nlohmann::json sbl_json = sbl_to_json(sbl->model());
    sbl_json["horizon"] = h;
    write_json_file(model_file(config.output_dir, "sbl", h), sbl_json);

    const nlohmann::json ckde_json = {
        {"kind", "ckde"},
        {"horizon", h},
        {"feature_bandwidths", ckde->model().feature_bandwidths},
        {"target_bandwidth", ckde->model().target_bandwidth},
        {"training_data",
         {{"data", config.data_path},
          {"zone", config.zone},
          {"horizon", h},
          {"lags", config.lags},
          {"partition", "train_a"},
          {"split", split_to_json(config.split)},
          {"count", a.size()},
          {"fingerprint", samples_fingerprint(a)}}}};
    write_json_file(model_file(config.output_dir, "ckde", h), ckde_json);

    nlohmann::json bde_json = spot_to_json(*spot);
    bde_json["horizon"] = h;
    bde_json["variance"] = refined.variance;
    write_json_file(model_file(config.output_dir, "bde", h), bde_json);

    const nlohmann::json em_json = {{"weights", em.weights},
                                    {"variance", em.variance},
                                    {"trace", em.trace},
                                    {"iterations", em.iterations},
                                    {"converged", em.converged},
                                    {"weight_only_steps", em.weight_only_steps},
                                    {"variance_mode", to_string(config.em.variance_mode)}};
    const nlohmann::json mmc_json = {
        {"kind", "mmc"},
        {"horizon", h},
        {"members", {"sbl", "ckde", "bde"}},
        {"member_files",
         {member_file_name("sbl", h), member_file_name("ckde", h), member_file_name("bde", h)}},
        {"weights", refined.weights},
        {"variance", refined.variance},
        {"refined", config.refine},
        {"refinement_improved", refined.improved},
        {"crps_train_em", refined.crps_before},
        {"crps_train_final", refined.crps_after},
        {"em", em_json},
        {"scaler", scaler_to_json(scaler)}};
    write_json_file(model_file(config.output_dir, "mmc", h), mmc_json);

    train_log["horizons"].push_back({{"horizon", h},
                                     {"samples",
                                      {{"candidates", all.candidates},
                                       {"skipped", all.skipped},
                                       {"train_a", split.train_a.size()},
                                       {"train_b", split.train_b.size()},
                                       {"validation", split.validation.size()},
                                       {"excluded", split.excluded}}},
                                     {"sbl",
                                      {{"bases", sbl->model().basis_count()},
                                       {"iterations", sbl->model().iterations},
                                       {"converged", sbl->model().converged},
                                       {"noise_variance", sbl->model().noise_variance},
                                       {"kernel_width", sbl->model().kernel_width}}},
                                     {"ckde", {{"target_bandwidth", ckde->model().target_bandwidth}}},
                                     {"bde", {{"kernel_width", spot->width()}, {"lambda", spot->lambda()}}},
                                     {"em", em_json},
                                     {"refinement",
                                      {{"enabled", config.refine},
                                       {"improved", refined.improved},
                                       {"evaluations", refined.evaluations},
                                       {"crps_before", refined.crps_before},
                                       {"crps_after", refined.crps_after},
                                       {"weights", refined.weights},
                                       {"variance", refined.variance}}}});
    log << tag << ": weights";
    for (double w : refined.weights) log << ' ' << w;
    log << ", training CRPS " << refined.crps_before << " -> " << refined.crps_after << '\n' << std::flush;
  }
  write_json_file((fs::path(config.output_dir) / "train_log.json").string(), train_log);
}

HorizonModels load_horizon_models(const std::string& model_dir, int horizon) {
  return stage("load models for horizon " + std::to_string(horizon), [&] {
    HorizonModels m;
    m.horizon = horizon;
    const nlohmann::json mmc = read_json_file(model_file(model_dir, "mmc", horizon));
    try {
      m.scaler = scaler_from_json(mmc.at("scaler"));
      m.sbl = std::make_shared<const SblMember>(sbl_from_json(read_json_file(model_file(model_dir, "sbl", horizon))));
      const nlohmann::json bde = read_json_file(model_file(model_dir, "bde", horizon));
      m.bde = std::make_shared<const BdeMember>(std::make_shared<const KernelRidgeForecaster>(spot_from_json(bde)));

      const nlohmann::json ckde = read_json_file(model_file(model_dir, "ckde", horizon));
      const nlohmann::json& ref = ckde.at("training_data");
      RunConfig data_config;
      data_config.lags = ref.at("lags").get<std::size_t>();
      data_config.split = split_from_json(ref.at("split"));
      const auto records = load_zone(ref.at("data").get<std::string>(), ref.at("zone").get<int>());
      const DatasetSplit split = horizon_split(records, ref.at("horizon").get<int>(), data_config);
      const std::vector<Sample> a = m.scaler.apply(split.train_a);
      if (a.size() != ref.at("count").get<std::size_t>() ||
          samples_fingerprint(a) != ref.at("fingerprint").get<std::string>()) {
        throw DataError("ckde training partition no longer matches the data file");
      }
      CkdeModel model;
      model.training_features = feature_matrix(a);
      const std::vector<double> ya = target_values(a);
      model.training_targets = std::make_shared<const std::vector<double>>(ya);
      model.feature_bandwidths = ckde.at("feature_bandwidths").get<std::vector<double>>();
      model.target_bandwidth = ckde.at("target_bandwidth").get<double>();
      if (model.feature_bandwidths.size() != model.dimension()) throw DataError("ckde: bandwidth count mismatch");
      m.ckde = std::make_shared<const CkdeMember>(std::move(model));

      const auto members = member_list(m);
      const auto& em = mmc.at("em");
      m.final_model = {members, mmc.at("weights").get<std::vector<double>>(), mmc.at("variance").get<double>(),
                       em.at("trace").get<std::vector<double>>(), mmc.at("refined").get<bool>()};
      m.em_model = {members, em.at("weights").get<std::vector<double>>(), em.at("variance").get<double>(),
                    em.at("trace").get<std::vector<double>>(), false};
      if (m.final_model.weights.size() != members.size() || m.em_model.weights.size() != members.size()) {
        throw DataError("mmc: weight count mismatch");
      }
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("model file: ") + e.what());
    }
    return m;
  });
}

std::vector<std::string> forecast_header() {
  std::vector<std::string> h{"issue_time", "horizon", "mean", "variance"};
  for (int i = 0; i < kForecastQuantiles; ++i) h.push_back(quantile_label(i));
  h.push_back("density");
  return h;
}

Table run_forecast(const RunConfig& config, const std::string& model_dir, const std::vector<TimePoint>& issue_times) {
  validate_config(config);
  if (issue_times.empty()) throw ConfigError("forecast: no issue times given");
  const auto records = stage("load data", [&] { return load_zone(config.data_path, config.zone); });
  std::map<int, HorizonModels> models;
  for (int h : config.horizons) models.emplace(h, load_horizon_models(model_dir, h));

  Table table{forecast_header(), {}};
  for (TimePoint t : issue_times) {
    for (int h : config.horizons) {
      const HorizonModels& m = models.at(h);
      const std::string tag = "forecast " + format_timestamp(t) + " horizon " + std::to_string(h);
      table.rows.push_back(stage(tag, [&] {
        const auto features = build_features(records, t, h, config.lags);
        if (!features) throw DataError("lags or weather forecast missing");
        const std::vector<double> x = m.scaler.apply(*features);
        const PredictiveDensity d(mmc_predict(m.final_model, x));
        std::vector<std::string> row{format_timestamp(t), std::to_string(h), format_number(mean_of(d)),
                                     format_number(variance_of(d))};
        for (int i = 0; i < kForecastQuantiles; ++i) row.push_back(format_number(quantile(d, 0.05 * (i + 1))));
        row.push_back(serialize_density(d));
        return row;
      }));
    }
  }
  return table;
}

std::vector<EvaluationReport> run_evaluate(const RunConfig& config, const std::string& model_dir,
                                           const std::string& out_dir, std::ostream& log) {
  validate_config(config);
  const auto records = stage("load data", [&] { return load_zone(config.data_path, config.zone); });
  std::map<std::string, std::vector<HorizonMetrics>> per_model;
  const UniformGrid grid;

  for (int h : config.horizons) {
    const std::string tag = "evaluate horizon " + std::to_string(h);
    const HorizonModels m = load_horizon_models(model_dir, h);
    const DatasetSplit split = stage(tag + " split", [&] { return horizon_split(records, h, config); });
    const std::vector<Sample> v = m.scaler.apply(split.validation);
    const Eigen::MatrixXd x = feature_matrix(v);
    log << tag << ": " << v.size() << " validation samples\n" << std::flush;

    stage(tag, [&] {
      ForecastSet base;
      base.observations = target_values(v);
      base.horizons = horizons_of(v);
      base.grid = grid;

      auto score = [&](const std::string& name, std::vector<PredictiveDensity> d, Eigen::MatrixXd cdfs) {
        ForecastSet f = base;
        f.densities = std::move(d);
        f.grid_cdfs = std::move(cdfs);
        per_model[name].push_back(build_report(name, f).horizons.front());
      };
      auto shared = [](const std::vector<PredictiveDensity>& d) {
        std::vector<std::shared_ptr<const PredictiveDensity>> out;
        out.reserve(d.size());
        for (const auto& p : d) out.push_back(std::make_shared<const PredictiveDensity>(p));
        return out;
      };

      const auto sbl_d = m.sbl->predict_batch(x, 0.0);
      const Eigen::MatrixXd sbl_c = m.sbl->grid_cdfs(x, sbl_d, grid);
      const auto ckde_d = m.ckde->predict_batch(x, 0.0);
      const Eigen::MatrixXd ckde_c = m.ckde->grid_cdfs(x, ckde_d, grid);
      const auto bde_d = m.bde->predict_batch(x, m.final_model.variance);
      const Eigen::MatrixXd bde_c = m.bde->grid_cdfs(x, bde_d, grid);
      const bool same_variance = m.em_model.variance == m.final_model.variance;
      const auto bde_em_d = same_variance ? bde_d : m.bde->predict_batch(x, m.em_model.variance);
      const Eigen::MatrixXd bde_em_c = same_variance ? bde_c : m.bde->grid_cdfs(x, bde_em_d, grid);

      const auto sbl_s = shared(sbl_d);
      const auto ckde_s = shared(ckde_d);
      const auto bde_s = shared(bde_d);
      const auto bde_em_s = same_variance ? bde_s : shared(bde_em_d);

      auto combine = [&](const MmcModel& model, const std::vector<std::shared_ptr<const PredictiveDensity>>& bde_p,
                         const Eigen::MatrixXd& bde_cdf, const std::string& name) {
        const auto& w = model.weights;
        std::vector<PredictiveDensity> d;
        d.reserve(v.size());
        for (std::size_t n = 0; n < v.size(); ++n) {
          d.emplace_back(CombinedDensity({{w[0], sbl_s[n]}, {w[1], ckde_s[n]}, {w[2], bde_p[n]}}));
        }
        Eigen::MatrixXd cdfs = w[0] * sbl_c + w[1] * ckde_c + w[2] * bde_cdf;
        score(name, std::move(d), std::move(cdfs));
      };
      combine(m.final_model, bde_s, bde_c, "mmc_em_fo");
      combine(m.em_model, bde_em_s, bde_em_c, "mmc_em");
      score("sbl", sbl_d, sbl_c);
      score("ckde", ckde_d, ckde_c);
      score("bde", bde_d, bde_c);
      return 0;
    });
  }

  std::vector<EvaluationReport> reports;
  for (const auto& name : kReportModels) reports.push_back(assemble_report(name, per_model.at(name)));

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw ConfigError("cannot create '" + out_dir + "': " + ec.message());
  for (const auto& r : reports) write_json_file((fs::path(out_dir) / ("report_" + r.model + ".json")).string(), report_to_json(r));
  const fs::path dir(out_dir);
  write_table((dir / "comparison.csv").string(), comparison_table(reports));
  write_table((dir / "reliability_by_rate.csv").string(), reliability_by_rate_table(reports));
  write_table((dir / "sharpness_by_rate.csv").string(), sharpness_by_rate_table(reports));
  write_table((dir / "crps_by_horizon.csv").string(), crps_by_horizon_table(reports));
  write_table((dir / "reliability_by_horizon.csv").string(), reliability_by_horizon_table(reports));
  write_table((dir / "sharpness_by_horizon.csv").string(), sharpness_by_horizon_table(reports));
  return reports;
}

}  // namespace mmcast
