#pragma once

// Structured text form of a density: an object with a "kind" tag and its
// parameters. Mixtures are written as parallel "centers"/"weights" arrays.
//
//   {"kind":"gaussian","mean":m,"variance":v}
//   {"kind":"beta","alpha":a,"beta":b}
//   {"kind":"mixture","bandwidth":h,"centers":[...],"weights":[...]}
//   {"kind":"combined","weights":[...],"members":[...]}
//   {"kind":"truncated","lower":0,"upper":1,"normalization":z,"inner":{...}}

#include <string>

#include "json.hpp"
#include "mmcast/density.hpp"

namespace mmcast {

nlohmann::json density_to_json(const PredictiveDensity& d);

/// Throws DataError on an unknown kind or missing field.
PredictiveDensity density_from_json(const nlohmann::json& j);

/// Single-line rendering used in the forecast table's density column.
std::string serialize_density(const PredictiveDensity& d);
PredictiveDensity parse_density(const std::string& text);

}  // namespace mmcast
