#include "mmcast/config.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "mmcast/error.hpp"

namespace mmcast {

namespace {

namespace fs = std::filesystem;

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ConfigError("unknown config key '" + (where.empty() ? key : where + "." + key) + "'");
  }
}

template <class T>
T get(const nlohmann::json& j, const std::string& key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config key '" + (where.empty() ? key : where + "." + key) + "' has the wrong type");
  }
}

TimePoint get_time(const nlohmann::json& j, const std::string& key, const std::string& where) {
  const auto text = get<std::string>(j, key, where);
  try {
    return parse_timestamp(text);
  } catch (const Error& e) {
    throw ConfigError("config key '" + where + "." + key + "': " + e.what());
  }
}

std::string resolve(const std::string& path, const std::string& base_dir) {
  const fs::path p(path);
  if (p.is_absolute()) return p.lexically_normal().string();
  const fs::path base = fs::absolute(base_dir.empty() ? fs::path(".") : fs::path(base_dir));
  return (base / p).lexically_normal().string();
}

std::vector<int> default_horizons() {
  std::vector<int> h(24);
  for (int i = 0; i < 24; ++i) h[static_cast<std::size_t>(i)] = i + 1;
  return h;
}

}  // namespace

std::vector<int> parse_horizon_list(const std::string& text) {
  std::set<int> out;
  std::stringstream ss(text);
  std::string part;
  auto parse_int = [&](const std::string& s) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(s, &used);
    } catch (const std::exception&) {
      throw ConfigError("bad horizon list '" + text + "'");
    }
    if (used != s.size()) throw ConfigError("bad horizon list '" + text + "'");
    return v;
  };
  while (std::getline(ss, part, ',')) {
    if (part.empty()) throw ConfigError("bad horizon list '" + text + "'");
    const auto dash = part.find('-');
    int lo = 0;
    int hi = 0;
    if (dash == std::string::npos) {
      lo = hi = parse_int(part);
    } else {
      lo = parse_int(part.substr(0, dash));
      hi = parse_int(part.substr(dash + 1));
    }
    if (lo > hi || lo < 1 || hi > 24) throw ConfigError("horizons must lie in 1..24: '" + text + "'");
    for (int h = lo; h <= hi; ++h) out.insert(h);
  }
  if (out.empty()) throw ConfigError("empty horizon list");
  return {out.begin(), out.end()};
}

void validate_config(const RunConfig& c) {
  if (c.horizons.empty()) throw ConfigError("horizons must not be empty");
  for (int h : c.horizons) {
    if (h < 1 || h > 24) throw ConfigError("horizons must lie in 1..24");
  }
  if (!std::is_sorted(c.horizons.begin(), c.horizons.end()) ||
      std::adjacent_find(c.horizons.begin(), c.horizons.end()) != c.horizons.end()) {
    throw ConfigError("horizons must be strictly increasing");
  }
  if (c.lags < 1) throw ConfigError("lags must be >= 1");
  if (!(c.split.train_a_end < c.split.train_b_end)) throw ConfigError("split: train_a_end must precede train_b_end");
  if (!c.split.validation_end || !(c.split.train_b_end < *c.split.validation_end)) {
    throw ConfigError("split: validation_end must follow train_b_end");
  }
  if (c.sbl.max_iterations < 1 || !(c.sbl.tolerance > 0.0) || !(c.sbl.alpha_max > 0.0)) {
    throw ConfigError("sbl: max_iterations, tolerance and alpha_max must be positive");
  }
  if (c.sbl.kernel_width && !(*c.sbl.kernel_width > 0.0)) throw ConfigError("sbl.kernel_width must be > 0");
  if (c.bde.kernel_width && !(*c.bde.kernel_width > 0.0)) throw ConfigError("bde.kernel_width must be > 0");
  if (!(c.bde.lambda > 0.0)) throw ConfigError("bde.lambda must be > 0");
  if (!(c.em.tolerance > 0.0) || c.em.max_iterations < 1) throw ConfigError("em: tolerance and max_iterations must be positive");
  if (c.pso.swarm_size < 1 || c.pso.iterations < 0 || !(c.pso.inertia > 0.0) || !(c.pso.cognitive > 0.0) ||
      !(c.pso.social > 0.0) || !(c.pso.weight_radius > 0.0) || !(c.pso.variance_radius > 0.0) ||
      !(c.pso.variance_radius < 1.0) || c.pso.variance_nodes < 5) {
    throw ConfigError("pso: settings must be positive, variance_radius below 1 and variance_nodes >= 5");
  }
  if (c.output_dir.empty()) throw ConfigError("output_dir must not be empty");
}

RunConfig config_from_json(const nlohmann::json& j, const std::string& base_dir) {
  reject_unknown(j, {"data", "zone", "horizons", "split", "lags", "sbl", "ckde", "bde", "em", "pso", "output_dir", "refine"},
                 "");
  RunConfig c;
  if (!j.contains("data")) throw ConfigError("config key 'data' is required");
  c.data_path = resolve(get<std::string>(j, "data", ""), base_dir);
  if (j.contains("zone")) c.zone = get<int>(j, "zone", "");
  if (j.contains("horizons")) {
    const auto& h = j.at("horizons");
    if (h.is_string()) {
      c.horizons = parse_horizon_list(h.get<std::string>());
    } else {
      std::vector<int> list;
      try {
        list = h.get<std::vector<int>>();
      } catch (const nlohmann::json::exception&) {
        throw ConfigError("config key 'horizons' must be a list of integers or a range string");
      }
      std::sort(list.begin(), list.end());
      c.horizons = list;
    }
  } else {
    c.horizons = default_horizons();
  }
  if (j.contains("split")) {
    const auto& s = j.at("split");
    reject_unknown(s, {"train_a_end", "train_b_end", "validation_end"}, "split");
    if (s.contains("train_a_end")) c.split.train_a_end = get_time(s, "train_a_end", "split");
    if (s.contains("train_b_end")) c.split.train_b_end = get_time(s, "train_b_end", "split");
    if (s.contains("validation_end")) c.split.validation_end = get_time(s, "validation_end", "split");
  }
  if (j.contains("lags")) {
    const int lags = get<int>(j, "lags", "");
    if (lags < 1) throw ConfigError("lags must be >= 1");
    c.lags = static_cast<std::size_t>(lags);
  }
  if (j.contains("sbl")) {
    const auto& s = j.at("sbl");
    reject_unknown(s, {"kernel_width", "max_iterations", "tolerance", "alpha_max", "max_centers"}, "sbl");
    if (s.contains("kernel_width")) c.sbl.kernel_width = get<double>(s, "kernel_width", "sbl");
    if (s.contains("max_iterations")) c.sbl.max_iterations = get<int>(s, "max_iterations", "sbl");
    if (s.contains("tolerance")) c.sbl.tolerance = get<double>(s, "tolerance", "sbl");
    if (s.contains("alpha_max")) c.sbl.alpha_max = get<double>(s, "alpha_max", "sbl");
    if (s.contains("max_centers")) c.sbl.max_centers = get<std::size_t>(s, "max_centers", "sbl");
  }
  if (j.contains("ckde")) {
    const auto& s = j.at("ckde");
    reject_unknown(s, {"feature_bandwidths", "target_bandwidth"}, "ckde");
    if (s.contains("feature_bandwidths")) c.ckde.feature_bandwidths = get<std::vector<double>>(s, "feature_bandwidths", "ckde");
    if (s.contains("target_bandwidth")) c.ckde.target_bandwidth = get<double>(s, "target_bandwidth", "ckde");
  }
  if (j.contains("bde")) {
    const auto& s = j.at("bde");
    reject_unknown(s, {"kernel_width", "lambda"}, "bde");
    if (s.contains("kernel_width")) c.bde.kernel_width = get<double>(s, "kernel_width", "bde");
    if (s.contains("lambda")) c.bde.lambda = get<double>(s, "lambda", "bde");
  }
  if (j.contains("em")) {
    const auto& s = j.at("em");
    reject_unknown(s, {"tolerance", "max_iterations", "variance_mode"}, "em");
    if (s.contains("tolerance")) c.em.tolerance = get<double>(s, "tolerance", "em");
    if (s.contains("max_iterations")) c.em.max_iterations = get<int>(s, "max_iterations", "em");
    if (s.contains("variance_mode")) c.em.variance_mode = parse_variance_mode(get<std::string>(s, "variance_mode", "em"));
  }
  if (j.contains("pso")) {
    const auto& s = j.at("pso");
    reject_unknown(s, {"swarm_size", "iterations", "inertia", "cognitive", "social", "weight_radius", "variance_radius",
                       "seed", "variance_nodes"},
                   "pso");
    if (s.contains("swarm_size")) c.pso.swarm_size = get<int>(s, "swarm_size", "pso");
    if (s.contains("iterations")) c.pso.iterations = get<int>(s, "iterations", "pso");
    if (s.contains("inertia")) c.pso.inertia = get<double>(s, "inertia", "pso");
    if (s.contains("cognitive")) c.pso.cognitive = get<double>(s, "cognitive", "pso");
    if (s.contains("social")) c.pso.social = get<double>(s, "social", "pso");
    if (s.contains("weight_radius")) c.pso.weight_radius = get<double>(s, "weight_radius", "pso");
    if (s.contains("variance_radius")) c.pso.variance_radius = get<double>(s, "variance_radius", "pso");
    if (s.contains("seed")) c.pso.seed = get<std::uint64_t>(s, "seed", "pso");
    if (s.contains("variance_nodes")) c.pso.variance_nodes = get<int>(s, "variance_nodes", "pso");
  }
  if (j.contains("output_dir")) c.output_dir = resolve(get<std::string>(j, "output_dir", ""), base_dir);
  if (j.contains("refine")) c.refine = get<bool>(j, "refine", "");
  validate_config(c);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j, fs::path(path).parent_path().string());
}

nlohmann::json config_to_json(const RunConfig& c) {
  nlohmann::json j;
  j["data"] = c.data_path;
  j["zone"] = c.zone;
  j["horizons"] = c.horizons;
  j["split"] = {{"train_a_end", format_timestamp(c.split.train_a_end)},
                {"train_b_end", format_timestamp(c.split.train_b_end)}};
  if (c.split.validation_end) j["split"]["validation_end"] = format_timestamp(*c.split.validation_end);
  j["lags"] = c.lags;
  j["sbl"] = {{"max_iterations", c.sbl.max_iterations},
              {"tolerance", c.sbl.tolerance},
              {"alpha_max", c.sbl.alpha_max},
              {"max_centers", c.sbl.max_centers}};
  if (c.sbl.kernel_width) j["sbl"]["kernel_width"] = *c.sbl.kernel_width;
  j["ckde"] = nlohmann::json::object();
  if (c.ckde.feature_bandwidths) j["ckde"]["feature_bandwidths"] = *c.ckde.feature_bandwidths;
  if (c.ckde.target_bandwidth) j["ckde"]["target_bandwidth"] = *c.ckde.target_bandwidth;
  j["bde"] = {{"lambda", c.bde.lambda}};
  if (c.bde.kernel_width) j["bde"]["kernel_width"] = *c.bde.kernel_width;
  j["em"] = {{"tolerance", c.em.tolerance},
             {"max_iterations", c.em.max_iterations},
             {"variance_mode", to_string(c.em.variance_mode)}};
  j["pso"] = {{"swarm_size", c.pso.swarm_size},       {"iterations", c.pso.iterations},
              {"inertia", c.pso.inertia},             {"cognitive", c.pso.cognitive},
              {"social", c.pso.social},               {"weight_radius", c.pso.weight_radius},
              {"variance_radius", c.pso.variance_radius}, {"seed", c.pso.seed},
              {"variance_nodes", c.pso.variance_nodes}};
  j["output_dir"] = c.output_dir;
  j["refine"] = c.refine;
  return j;
}

void apply_overrides(RunConfig& config, const ConfigOverrides& o) {
  if (o.seed) config.pso.seed = *o.seed;
  if (o.no_refine) config.refine = false;
  if (o.horizons) config.horizons = *o.horizons;
  if (o.data_path) config.data_path = fs::absolute(*o.data_path).lexically_normal().string();
  if (o.output_dir) config.output_dir = fs::absolute(*o.output_dir).lexically_normal().string();
  validate_config(config);
}

}  // namespace mmcast
