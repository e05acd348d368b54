#include "mmcast/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include "mmcast/error.hpp"
#include "mmcast/special.hpp"

namespace mmcast {

namespace {

using std::chrono::hours;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return out;
}

std::optional<double> to_double(std::string_view s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<int> to_int(std::string_view s) {
  int v = 0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return v;
}

// Slot index of each record by whole hours from the first record.
struct HourlyIndex {
  TimePoint origin;
  std::vector<const RawRecord*> slots;

  explicit HourlyIndex(std::span<const RawRecord> records) {
    if (records.empty()) return;
    origin = records.front().timestamp;
    const auto span_hours = std::chrono::duration_cast<hours>(records.back().timestamp - origin).count();
    if (span_hours < 0) throw DataError("records are not time ordered");
    slots.assign(static_cast<std::size_t>(span_hours) + 1, nullptr);
    for (const auto& r : records) {
      const auto off = r.timestamp - origin;
      if (off.count() % 3600 != 0) throw DataError("record at " + format_timestamp(r.timestamp) + " is not on the hour");
      const auto h = std::chrono::duration_cast<hours>(off).count();
      if (h < 0 || static_cast<std::size_t>(h) >= slots.size()) throw DataError("records are not time ordered");
      slots[static_cast<std::size_t>(h)] = &r;
    }
  }

  const RawRecord* at(std::ptrdiff_t i) const {
    if (i < 0 || static_cast<std::size_t>(i) >= slots.size()) return nullptr;
    return slots[static_cast<std::size_t>(i)];
  }

  std::ptrdiff_t slot_of(TimePoint t) const {
    return static_cast<std::ptrdiff_t>(std::chrono::duration_cast<hours>(t - origin).count());
  }
};

std::optional<std::vector<double>> features_at(const HourlyIndex& idx, std::ptrdiff_t issue, int horizon,
                                               std::size_t lags) {
  std::vector<double> f;
  f.reserve(lags + kWeatherFeatures);
  for (std::size_t l = 0; l < lags; ++l) {
    const RawRecord* r = idx.at(issue - static_cast<std::ptrdiff_t>(l));
    if (r == nullptr || !r->target) return std::nullopt;
    f.push_back(*r->target);
  }
  const RawRecord* t = idx.at(issue + horizon);
  if (t == nullptr) return std::nullopt;
  const WindVector w10 = wind_transform(t->u10, t->v10);
  const WindVector w100 = wind_transform(t->u100, t->v100);
  f.insert(f.end(), {w10.speed, w10.angle, w100.speed, w100.angle});
  return f;
}

void check_horizon(int horizon) {
  if (horizon < 1 || horizon > 24) throw ConfigError("horizon must lie in 1..24, got " + std::to_string(horizon));
}

}  // namespace

TimePoint parse_timestamp(std::string_view text) {
  text = trim(text);
  const auto space = text.find(' ');
  if (space != 8) throw DataError("bad timestamp '" + std::string(text) + "'");
  const auto date = text.substr(0, 8);
  const auto time = trim(text.substr(space + 1));
  const auto colon = time.find(':');
  const auto y = to_int(date.substr(0, 4));
  const auto m = to_int(date.substr(4, 2));
  const auto d = to_int(date.substr(6, 2));
  const auto hh = colon == std::string_view::npos ? std::nullopt : to_int(time.substr(0, colon));
  const auto mm = colon == std::string_view::npos ? std::nullopt : to_int(time.substr(colon + 1));
  if (!y || !m || !d || !hh || !mm) throw DataError("bad timestamp '" + std::string(text) + "'");
  const std::chrono::year_month_day ymd{std::chrono::year(*y), std::chrono::month(static_cast<unsigned>(*m)),
                                        std::chrono::day(static_cast<unsigned>(*d))};
  if (!ymd.ok() || *hh < 0 || *hh > 24 || *mm != 0) throw DataError("bad timestamp '" + std::string(text) + "'");
  return TimePoint(std::chrono::sys_days(ymd)) + hours(*hh);
}

std::string format_timestamp(TimePoint t) {
  const auto day = std::chrono::floor<std::chrono::days>(t);
  const std::chrono::year_month_day ymd{day};
  const auto hh = std::chrono::duration_cast<hours>(t - day).count();
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d%02u%02u %02d:00", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), static_cast<int>(hh));
  return buf;
}

WindVector wind_transform(double u, double v) {
  const double speed = std::hypot(u, v);
  if (u == 0.0 && v == 0.0) return {0.0, 0.0};
  double angle = 0.0;
  if (u > 0.0 || (u == 0.0 && v >= 0.0)) {
    // u >= 0: first quadrant, or fourth quadrant shifted by 2pi.
    angle = u == 0.0 ? special::kPi / 2.0 : std::atan(v / u);
    if (v < 0.0) angle += 2.0 * special::kPi;
  } else if (u == 0.0) {
    angle = 1.5 * special::kPi;
  } else {
    angle = special::kPi + std::atan(v / u);
  }
  if (angle >= 2.0 * special::kPi) angle -= 2.0 * special::kPi;
  return {speed, angle};
}

std::vector<RawRecord> parse_records(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError(1, "missing header row");
  ++line_no;
  const auto header = split_csv(line);
  const std::array<std::string_view, 7> required{"TIMESTAMP", "ZONEID", "TARGETVAR", "U10", "V10", "U100", "V100"};
  std::array<std::size_t, 7> col{};
  for (std::size_t k = 0; k < required.size(); ++k) {
    const auto it = std::find(header.begin(), header.end(), required[k]);
    if (it == header.end()) throw ParseError(line_no, "header lacks column " + std::string(required[k]));
    col[k] = static_cast<std::size_t>(it - header.begin());
  }

  std::vector<RawRecord> out;
  std::map<int, TimePoint> last_seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != header.size()) {
      throw ParseError(line_no, "expected " + std::to_string(header.size()) + " fields, found " +
                                    std::to_string(fields.size()));
    }
    RawRecord r;
    try {
      r.timestamp = parse_timestamp(fields[col[0]]);
    } catch (const DataError& e) {
      throw ParseError(line_no, e.what());
    }
    const auto zone = to_int(fields[col[1]]);
    if (!zone) throw ParseError(line_no, "bad zone id");
    r.zone = *zone;
    if (!fields[col[2]].empty()) {
      const auto t = to_double(fields[col[2]]);
      if (!t) throw ParseError(line_no, "bad target value");
      if (*t < 0.0 || *t > 1.0) {
        throw DataError("line " + std::to_string(line_no) + ": target " + std::string(fields[col[2]]) +
                        " outside [0,1]");
      }
      r.target = *t;
    }
    double* wind[4] = {&r.u10, &r.v10, &r.u100, &r.v100};
    for (std::size_t k = 0; k < 4; ++k) {
      const auto v = to_double(fields[col[3 + k]]);
      if (!v) throw ParseError(line_no, "bad wind component in column " + std::string(required[3 + k]));
      *wind[k] = *v;
    }
    const auto [it, inserted] = last_seen.try_emplace(r.zone, r.timestamp);
    if (!inserted) {
      if (r.timestamp <= it->second) {
        throw DataError("line " + std::to_string(line_no) + ": timestamp " + format_timestamp(r.timestamp) +
                        " does not increase for zone " + std::to_string(r.zone));
      }
      it->second = r.timestamp;
    }
    out.push_back(r);
  }
  return out;
}

std::vector<RawRecord> load_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open data file '" + path + "'");
  return parse_records(in);
}

void write_records(std::ostream& out, std::span<const RawRecord> records) {
  out << "TIMESTAMP,ZONEID,TARGETVAR,U10,V10,U100,V100\n";
  char buf[256];
  for (const auto& r : records) {
    std::string target;
    if (r.target) {
      std::snprintf(buf, sizeof buf, "%.10g", *r.target);
      target = buf;
    }
    std::snprintf(buf, sizeof buf, ",%.10g,%.10g,%.10g,%.10g\n", r.u10, r.v10, r.u100, r.v100);
    out << format_timestamp(r.timestamp) << ',' << r.zone << ',' << target << buf;
  }
}

std::vector<RawRecord> select_zone(std::span<const RawRecord> records, int zone) {
  std::vector<RawRecord> out;
  for (const auto& r : records) {
    if (r.zone == zone) out.push_back(r);
  }
  return out;
}

std::vector<std::string> feature_names(std::size_t lags) {
  std::vector<std::string> names;
  for (std::size_t l = 0; l < lags; ++l) names.push_back(l == 0 ? "y(t0)" : "y(t0-" + std::to_string(l) + ")");
  names.insert(names.end(), {"V10", "theta10", "V100", "theta100"});
  return names;
}

SampleSet build_samples(std::span<const RawRecord> records, int horizon, std::size_t lags) {
  check_horizon(horizon);
  if (lags == 0) throw ConfigError("lag count must be positive");
  SampleSet out;
  const HourlyIndex idx(records);
  const auto n = static_cast<std::ptrdiff_t>(idx.slots.size());
  const auto first = static_cast<std::ptrdiff_t>(lags) - 1;
  for (std::ptrdiff_t issue = first; issue + horizon < n; ++issue) {
    ++out.candidates;
    auto f = features_at(idx, issue, horizon, lags);
    const RawRecord* target = idx.at(issue + horizon);
    if (!f || target == nullptr || !target->target) {
      ++out.skipped;
      continue;
    }
    Sample s;
    s.features = std::move(*f);
    s.target = *target->target;
    s.issue_time = idx.origin + hours(issue);
    s.horizon = horizon;
    out.samples.push_back(std::move(s));
  }
  return out;
}

std::optional<std::vector<double>> build_features(std::span<const RawRecord> records, TimePoint issue_time,
                                                  int horizon, std::size_t lags) {
  check_horizon(horizon);
  const HourlyIndex idx(records);
  if (idx.slots.empty()) return std::nullopt;
  return features_at(idx, idx.slot_of(issue_time), horizon, lags);
}

std::vector<double> autocorrelation(std::span<const double> series, std::size_t max_lag) {
  if (series.size() <= max_lag) throw DomainError("autocorrelation: series shorter than max_lag + 1");
  const double n = static_cast<double>(series.size());
  const double mean = std::accumulate(series.begin(), series.end(), 0.0) / n;
  double denom = 0.0;
  for (double x : series) denom += (x - mean) * (x - mean);
  if (!(denom > 0.0)) throw DomainError("autocorrelation: series has zero variance");
  std::vector<double> out(max_lag + 1);
  for (std::size_t k = 0; k <= max_lag; ++k) {
    double num = 0.0;
    for (std::size_t t = 0; t + k < series.size(); ++t) num += (series[t] - mean) * (series[t + k] - mean);
    out[k] = num / denom;
  }
  return out;
}

double cross_correlation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw DomainError("cross_correlation: need equal lengths >= 2");
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) throw DomainError("cross_correlation: zero variance");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

SplitBoundaries default_split_boundaries() {
  return {parse_timestamp("20120501 00:00"), parse_timestamp("20120601 00:00"), parse_timestamp("20120701 00:00")};
}

DatasetSplit split_dataset(std::span<const Sample> samples, const SplitBoundaries& b) {
  if (!(b.train_a_end < b.train_b_end)) throw ConfigError("split: train_a_end must precede train_b_end");
  if (b.validation_end && !(b.train_b_end < *b.validation_end)) {
    throw ConfigError("split: train_b_end must precede validation_end");
  }
  DatasetSplit out;
  for (const auto& s : samples) {
    if (s.issue_time <= b.train_a_end) {
      out.train_a.push_back(s);
    } else if (s.issue_time <= b.train_b_end) {
      out.train_b.push_back(s);
    } else if (!b.validation_end || s.issue_time <= *b.validation_end) {
      out.validation.push_back(s);
    } else {
      ++out.excluded;
    }
  }
  if (out.train_a.empty()) throw ConfigError("split: training set A is empty");
  if (out.train_b.empty()) throw ConfigError("split: training set B is empty");
  if (out.validation.empty()) throw ConfigError("split: validation set is empty");
  return out;
}

FeatureScaler::FeatureScaler(std::vector<double> location, std::vector<double> scale)
    : location_(std::move(location)), scale_(std::move(scale)) {
  if (location_.size() != scale_.size()) throw DomainError("FeatureScaler: size mismatch");
  for (double s : scale_) {
    if (!(s > 0.0)) throw DomainError("FeatureScaler: scale must be > 0");
  }
}

FeatureScaler FeatureScaler::fit(std::span<const Sample> samples) {
  if (samples.empty()) throw DataError("scaler: no samples");
  const std::size_t dim = samples.front().features.size();
  const double n = static_cast<double>(samples.size());
  std::vector<double> loc(dim, 0.0);
  std::vector<double> scale(dim, 0.0);
  for (const auto& s : samples) {
    if (s.features.size() != dim) throw DataError("scaler: inconsistent feature dimension");
    for (std::size_t d = 0; d < dim; ++d) loc[d] += s.features[d];
  }
  for (double& l : loc) l /= n;
  for (const auto& s : samples) {
    for (std::size_t d = 0; d < dim; ++d) scale[d] += (s.features[d] - loc[d]) * (s.features[d] - loc[d]);
  }
  const auto names = dim >= kWeatherFeatures ? feature_names(dim - kWeatherFeatures) : std::vector<std::string>{};
  for (std::size_t d = 0; d < dim; ++d) {
    scale[d] = std::sqrt(scale[d] / n);
    if (!(scale[d] > 0.0)) {
      const std::string name = d < names.size() ? names[d] : std::to_string(d);
      throw DataError("scaler: feature " + std::to_string(d) + " (" + name + ") is constant");
    }
  }
  return FeatureScaler(std::move(loc), std::move(scale));
}

std::vector<double> FeatureScaler::apply(std::span<const double> features) const {
  if (features.size() != location_.size()) throw DomainError("scaler: feature dimension mismatch");
  std::vector<double> out(features.size());
  for (std::size_t d = 0; d < features.size(); ++d) out[d] = (features[d] - location_[d]) / scale_[d];
  return out;
}

Sample FeatureScaler::apply(const Sample& s) const {
  Sample out = s;
  out.features = apply(std::span<const double>(s.features));
  return out;
}

std::vector<Sample> FeatureScaler::apply(std::span<const Sample> samples) const {
  std::vector<Sample> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(apply(s));
  return out;
}

}  // namespace mmcast
