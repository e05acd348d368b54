#include "mmcast/density_io.hpp"

#include <memory>

#include "mmcast/error.hpp"

namespace mmcast {

using nlohmann::json;

json density_to_json(const PredictiveDensity& d) {
  switch (d.kind()) {
    case DensityKind::gaussian: {
      const auto& g = *d.get_if<GaussianDensity>();
      return {{"kind", "gaussian"}, {"mean", g.mean()}, {"variance", g.variance()}};
    }
    case DensityKind::beta: {
      const auto& b = *d.get_if<BetaDensity>();
      return {{"kind", "beta"}, {"alpha", b.alpha()}, {"beta", b.beta()}};
    }
    case DensityKind::mixture: {
      const auto& m = *d.get_if<GaussianMixtureDensity>();
      return {{"kind", "mixture"},
              {"bandwidth", m.bandwidth()},
              {"centers", std::vector<double>(m.centers().begin(), m.centers().end())},
              {"weights", std::vector<double>(m.weights().begin(), m.weights().end())}};
    }
    case DensityKind::combined: {
      const auto& c = *d.get_if<CombinedDensity>();
      json weights = json::array();
      json members = json::array();
      for (const auto& m : c.members()) {
        weights.push_back(m.weight);
        members.push_back(density_to_json(*m.density));
      }
      return {{"kind", "combined"}, {"weights", weights}, {"members", members}};
    }
    case DensityKind::truncated: {
      const auto& t = *d.get_if<TruncatedDensity>();
      return {{"kind", "truncated"},
              {"lower", TruncatedDensity::lower()},
              {"upper", TruncatedDensity::upper()},
              {"normalization", t.normalization()},
              {"inner", density_to_json(t.inner())}};
    }
  }
  throw DataError("density_to_json: unknown density kind");
}

PredictiveDensity density_from_json(const json& j) {
  try {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "gaussian") return GaussianDensity(j.at("mean").get<double>(), j.at("variance").get<double>());
    if (kind == "beta") return BetaDensity(j.at("alpha").get<double>(), j.at("beta").get<double>());
    if (kind == "mixture") {
      return GaussianMixtureDensity(j.at("centers").get<std::vector<double>>(),
                                    j.at("weights").get<std::vector<double>>(), j.at("bandwidth").get<double>());
    }
    if (kind == "combined") {
      const auto weights = j.at("weights").get<std::vector<double>>();
      std::vector<PredictiveDensity> members;
      for (const auto& m : j.at("members")) members.push_back(density_from_json(m));
      return CombinedDensity(weights, std::move(members));
    }
    if (kind == "truncated") {
      return TruncatedDensity(std::make_shared<const PredictiveDensity>(density_from_json(j.at("inner"))));
    }
    throw DataError("unknown density kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed density record: ") + e.what());
  }
}

std::string serialize_density(const PredictiveDensity& d) { return density_to_json(d).dump(); }

PredictiveDensity parse_density(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed density record: ") + e.what());
  }
  return density_from_json(j);
}

}  // namespace mmcast
