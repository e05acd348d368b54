#include "mmcast/model_io.hpp"

#include <bit>
#include <cstdio>
#include <fstream>

#include "mmcast/error.hpp"

namespace mmcast {

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw DataError("matrix: expected an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = rows ? static_cast<Eigen::Index>(j.front().size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) throw DataError("matrix: ragged rows");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

nlohmann::json sbl_to_json(const SblModel& m) {
  return {{"kind", "sbl"},
          {"kernel_width", m.kernel_width},
          {"has_bias", m.has_bias},
          {"noise_variance", m.noise_variance},
          {"centers", matrix_to_json(m.relevance_inputs)},
          {"posterior_mean", vector_to_json(m.posterior_mean)},
          {"posterior_cov", matrix_to_json(m.posterior_cov)},
          {"alpha", vector_to_json(m.alpha)},
          {"iterations", m.iterations},
          {"converged", m.converged},
          {"evidence_trace", m.evidence_trace}};
}

SblModel sbl_from_json(const nlohmann::json& j) {
  try {
    SblModel m;
    m.kernel_width = j.at("kernel_width").get<double>();
    m.has_bias = j.at("has_bias").get<bool>();
    m.noise_variance = j.at("noise_variance").get<double>();
    m.relevance_inputs = matrix_from_json(j.at("centers"));
    m.posterior_mean = vector_from_json(j.at("posterior_mean"));
    m.posterior_cov = matrix_from_json(j.at("posterior_cov"));
    m.alpha = vector_from_json(j.at("alpha"));
    m.iterations = j.at("iterations").get<int>();
    m.converged = j.at("converged").get<bool>();
    m.evidence_trace = j.at("evidence_trace").get<std::vector<double>>();
    const Eigen::Index bases = m.relevance_inputs.rows() + (m.has_bias ? 1 : 0);
    if (m.posterior_mean.size() != bases || m.posterior_cov.rows() != bases || m.posterior_cov.cols() != bases) {
      throw DataError("sbl model: inconsistent basis count");
    }
    if (!(m.kernel_width > 0.0) || !(m.noise_variance > 0.0)) throw DataError("sbl model: invalid width or noise");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("sbl model: ") + e.what());
  }
}

nlohmann::json spot_to_json(const KernelRidgeForecaster& s) {
  return {{"kind", "kernel_ridge"},
          {"kernel_width", s.width()},
          {"lambda", s.lambda()},
          {"target_mean", s.target_mean()},
          {"centers", matrix_to_json(s.centers())},
          {"coefficients", vector_to_json(s.coefficients())}};
}

KernelRidgeForecaster spot_from_json(const nlohmann::json& j) {
  try {
    return KernelRidgeForecaster(matrix_from_json(j.at("centers")), vector_from_json(j.at("coefficients")),
                                 j.at("target_mean").get<double>(), j.at("kernel_width").get<double>(),
                                 j.at("lambda").get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("spot forecaster: ") + e.what());
  } catch (const DomainError& e) {
    throw DataError(std::string("spot forecaster: ") + e.what());
  }
}

nlohmann::json scaler_to_json(const FeatureScaler& s) {
  return {{"location", s.location()}, {"scale", s.scale()}};
}

FeatureScaler scaler_from_json(const nlohmann::json& j) {
  try {
    return FeatureScaler(j.at("location").get<std::vector<double>>(), j.at("scale").get<std::vector<double>>());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("scaler: ") + e.what());
  } catch (const DomainError& e) {
    throw DataError(std::string("scaler: ") + e.what());
  }
}

std::string samples_fingerprint(std::span<const Sample> samples) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&](double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xffU;
      h *= 1099511628211ULL;
    }
  };
  for (const auto& s : samples) {
    for (double f : s.features) mix(f);
    mix(s.target);
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("'" + path + "' is not valid JSON: " + e.what());
  }
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
  if (!out) throw ConfigError("failed writing '" + path + "'");
}

}  // namespace mmcast
