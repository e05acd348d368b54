#pragma once

// JSON records for fitted models. Matrices are arrays of rows.

#include <cstdint>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "json.hpp"

#include "mmcast/bde.hpp"
#include "mmcast/data.hpp"
#include "mmcast/sbl.hpp"

namespace mmcast {

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j);
nlohmann::json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const nlohmann::json& j);

nlohmann::json sbl_to_json(const SblModel& model);
SblModel sbl_from_json(const nlohmann::json& j);

nlohmann::json spot_to_json(const KernelRidgeForecaster& spot);
KernelRidgeForecaster spot_from_json(const nlohmann::json& j);

nlohmann::json scaler_to_json(const FeatureScaler& scaler);
FeatureScaler scaler_from_json(const nlohmann::json& j);

/// FNV-1a over the bit patterns of the features and targets, as 16 hex digits.
std::string samples_fingerprint(std::span<const Sample> samples);

/// Reads a JSON file; DataError when missing or malformed.
nlohmann::json read_json_file(const std::string& path);
/// Writes with two-space indentation and a trailing newline.
void write_json_file(const std::string& path, const nlohmann::json& j);

}  // namespace mmcast
