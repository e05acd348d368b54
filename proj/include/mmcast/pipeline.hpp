#pragma once

// End-to-end commands behind the CLI. Train fits members on training set A
// and the combiner on training set B for each horizon and persists them;
// forecast and evaluate reload the persisted models.
//
// Files per horizon NN (two digits) in the model directory:
//   sbl_hNN.json, ckde_hNN.json, bde_hNN.json, mmc_hNN.json
// plus train_log.json. CKDE files store bandwidths and a reference to the
// training partition, which is rebuilt from the data file on load.

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "mmcast/combiner.hpp"
#include "mmcast/config.hpp"
#include "mmcast/data.hpp"
#include "mmcast/evaluation.hpp"
#include "mmcast/member.hpp"

namespace mmcast {

/// Member and combiner models for one horizon.
struct HorizonModels {
  int horizon = 0;
  FeatureScaler scaler;
  std::shared_ptr<const SblMember> sbl;
  std::shared_ptr<const CkdeMember> ckde;
  std::shared_ptr<const BdeMember> bde;
  MmcModel final_model;  // EM followed by CRPS refinement when enabled
  MmcModel em_model;     // EM solution
};

/// Samples of one horizon split into the three partitions.
DatasetSplit horizon_split(const std::vector<RawRecord>& zone_records, int horizon, const RunConfig& config,
                           SampleSet* all = nullptr);

std::string model_file(const std::string& dir, const std::string& kind, int horizon);

/// Trains every configured horizon into config.output_dir. Progress lines go
/// to `log`. Errors are rethrown with the failing stage prefixed.
void run_train(const RunConfig& config, std::ostream& log);

HorizonModels load_horizon_models(const std::string& model_dir, int horizon);

inline constexpr int kForecastQuantiles = 19;  // 5%, 10%, ..., 95%

std::vector<std::string> forecast_header();

/// One row per issue time and configured horizon.
Table run_forecast(const RunConfig& config, const std::string& model_dir, const std::vector<TimePoint>& issue_times);

inline const std::vector<std::string> kReportModels = {"mmc_em_fo", "mmc_em", "sbl", "ckde", "bde"};

/// Scores the five forecasters on the validation partition and writes
/// report_<model>.json plus the flat tables into `out_dir`.
std::vector<EvaluationReport> run_evaluate(const RunConfig& config, const std::string& model_dir,
                                           const std::string& out_dir, std::ostream& log);

}  // namespace mmcast
