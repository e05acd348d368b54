#include "mmcast/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>

#include "mmcast/error.hpp"
#include "mmcast/kernels.hpp"
#include "mmcast/parallel.hpp"

namespace mmcast {

namespace {

void check_pair(std::size_t a, std::size_t b, const char* what) {
  if (a == 0) throw DomainError(std::string(what) + ": empty input");
  if (a != b) throw DomainError(std::string(what) + ": length mismatch");
}

struct SampleMetrics {
  double mean = 0.0;
  double crps = 0.0;
  std::vector<Interval> intervals;  // one per nominal rate
};

std::vector<SampleMetrics> sample_metrics(const ForecastSet& f, std::span<const double> rates) {
  const std::size_t n = f.densities.size();
  check_pair(n, f.observations.size(), "build_report");
  if (f.horizons.size() != n) throw DomainError("build_report: horizon count mismatch");
  const bool tabulated = f.grid_cdfs.size() > 0;
  if (tabulated && (static_cast<std::size_t>(f.grid_cdfs.rows()) != f.grid.points ||
                    static_cast<std::size_t>(f.grid_cdfs.cols()) != n)) {
    throw DomainError("build_report: grid CDF shape mismatch");
  }
  std::vector<SampleMetrics> out(n);
  parallel_for(static_cast<std::ptrdiff_t>(n), true, [&](std::ptrdiff_t idx) {
    const auto s = static_cast<std::size_t>(idx);
    const PredictiveDensity& d = f.densities[s];
    const double y = f.observations[s];
    SampleMetrics& m = out[s];
    m.mean = mean_of(d);
    m.intervals.resize(rates.size());
    if (tabulated) {
      const std::span<const double> cdf(f.grid_cdfs.col(idx).data(), f.grid.points);
      m.crps = grid_crps(f.grid, cdf, cdf_at(d, y), y);
      for (std::size_t r = 0; r < rates.size(); ++r) {
        const double alpha = 0.5 * (1.0 - rates[r]);
        double lo = quantile_on_grid(d, alpha, f.grid, cdf);
        double hi = quantile_on_grid(d, 1.0 - alpha, f.grid, cdf);
        if (lo > hi) lo = hi = 0.5 * (lo + hi);
        m.intervals[r] = {lo, hi};
      }
    } else {
      m.crps = crps_single(d, y);
      for (std::size_t r = 0; r < rates.size(); ++r) m.intervals[r] = central_interval(d, rates[r]);
    }
  });
  return out;
}

double mean_of_values(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / static_cast<double>(v.size());
}

}  // namespace

std::vector<double> nominal_rates() {
  std::vector<double> r;
  for (int i = 1; i <= 9; ++i) r.push_back(i / 10.0);
  return r;
}

double mae_percent(std::span<const double> expectations, std::span<const double> observations) {
  check_pair(expectations.size(), observations.size(), "mae");
  double acc = 0.0;
  for (std::size_t i = 0; i < expectations.size(); ++i) acc += std::fabs(expectations[i] - observations[i]);
  return 100.0 * acc / static_cast<double>(expectations.size());
}

double rmse_percent(std::span<const double> expectations, std::span<const double> observations) {
  check_pair(expectations.size(), observations.size(), "rmse");
  double acc = 0.0;
  for (std::size_t i = 0; i < expectations.size(); ++i) {
    const double e = expectations[i] - observations[i];
    acc += e * e;
  }
  return 100.0 * std::sqrt(acc / static_cast<double>(expectations.size()));
}

double reliability_bias(std::span<const PredictiveDensity> densities, std::span<const double> observations,
                        double alpha) {
  check_pair(densities.size(), observations.size(), "reliability_bias");
  if (!(alpha > 0.0 && alpha < 0.5)) throw DomainError("reliability_bias: alpha must lie in (0, 0.5)");
  const double nominal = 1.0 - 2.0 * alpha;
  std::vector<char> inside(densities.size());
  parallel_for(static_cast<std::ptrdiff_t>(densities.size()), true, [&](std::ptrdiff_t i) {
    const auto s = static_cast<std::size_t>(i);
    const Interval iv = central_interval(densities[s], nominal);
    inside[s] = observations[s] >= iv.lower && observations[s] <= iv.upper;
  });
  const auto count = static_cast<double>(std::count(inside.begin(), inside.end(), 1));
  return (count / static_cast<double>(densities.size()) - nominal) * 100.0;
}

double sharpness(std::span<const PredictiveDensity> densities, double alpha) {
  if (densities.empty()) throw DomainError("sharpness: empty input");
  if (!(alpha > 0.0 && alpha < 0.5)) throw DomainError("sharpness: alpha must lie in (0, 0.5)");
  std::vector<double> width(densities.size());
  parallel_for(static_cast<std::ptrdiff_t>(densities.size()), true, [&](std::ptrdiff_t i) {
    const auto s = static_cast<std::size_t>(i);
    width[s] = std::fabs(quantile(densities[s], 1.0 - alpha) - quantile(densities[s], alpha));
  });
  return mean_of_values(width);
}

double crps_average(std::span<const PredictiveDensity> densities, std::span<const double> observations) {
  check_pair(densities.size(), observations.size(), "crps_average");
  std::vector<double> scores(densities.size());
  parallel_for(static_cast<std::ptrdiff_t>(densities.size()), true, [&](std::ptrdiff_t i) {
    const auto s = static_cast<std::size_t>(i);
    scores[s] = crps_single(densities[s], observations[s]);
  });
  return mean_of_values(scores);
}

std::vector<HorizonScore> crps_by_horizon(std::span<const PredictiveDensity> densities,
                                          std::span<const double> observations, std::span<const int> horizons) {
  check_pair(densities.size(), observations.size(), "crps_by_horizon");
  if (horizons.size() != densities.size()) throw DomainError("crps_by_horizon: horizon count mismatch");
  std::vector<double> scores(densities.size());
  parallel_for(static_cast<std::ptrdiff_t>(densities.size()), true, [&](std::ptrdiff_t i) {
    const auto s = static_cast<std::size_t>(i);
    scores[s] = crps_single(densities[s], observations[s]);
  });
  std::map<int, std::pair<double, std::size_t>> groups;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    auto& g = groups[horizons[i]];
    g.first += scores[i];
    g.second += 1;
  }
  std::vector<HorizonScore> out;
  for (const auto& [h, g] : groups) out.push_back({h, g.first / static_cast<double>(g.second)});
  return out;
}

EvaluationReport build_report(const std::string& model, const ForecastSet& forecasts) {
  const std::vector<double> rates = nominal_rates();
  const std::vector<SampleMetrics> metrics = sample_metrics(forecasts, rates);

  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < metrics.size(); ++i) groups[forecasts.horizons[i]].push_back(i);

  std::vector<HorizonMetrics> horizons;
  for (const auto& [h, idx] : groups) {
    HorizonMetrics hm;
    hm.horizon = h;
    hm.count = idx.size();
    std::vector<double> means;
    std::vector<double> obs;
    double crps = 0.0;
    for (std::size_t i : idx) {
      means.push_back(metrics[i].mean);
      obs.push_back(forecasts.observations[i]);
      crps += metrics[i].crps;
    }
    hm.mae = mae_percent(means, obs);
    hm.rmse = rmse_percent(means, obs);
    hm.crps = crps / static_cast<double>(idx.size());
    for (std::size_t r = 0; r < rates.size(); ++r) {
      std::size_t covered = 0;
      double width = 0.0;
      for (std::size_t i : idx) {
        const Interval iv = metrics[i].intervals[r];
        const double y = forecasts.observations[i];
        if (y >= iv.lower && y <= iv.upper) ++covered;
        width += iv.upper - iv.lower;
      }
      RateMetrics rm;
      rm.nominal = rates[r];
      rm.reliability_bias = (static_cast<double>(covered) / static_cast<double>(idx.size()) - rates[r]) * 100.0;
      rm.sharpness = width / static_cast<double>(idx.size());
      hm.rates.push_back(rm);
    }
    horizons.push_back(std::move(hm));
  }
  return assemble_report(model, std::move(horizons));
}

EvaluationReport assemble_report(const std::string& model, std::vector<HorizonMetrics> horizons) {
  if (horizons.empty()) throw DomainError("assemble_report: no horizons");
  std::sort(horizons.begin(), horizons.end(), [](const auto& a, const auto& b) { return a.horizon < b.horizon; });
  EvaluationReport report;
  report.model = model;
  const std::size_t rate_count = horizons.front().rates.size();
  report.rates.resize(rate_count);
  for (std::size_t r = 0; r < rate_count; ++r) report.rates[r].nominal = horizons.front().rates[r].nominal;
  double abs_bias = 0.0;
  for (const auto& hm : horizons) {
    if (hm.rates.size() != rate_count) throw DomainError("assemble_report: rate count differs between horizons");
    report.mae += hm.mae;
    report.rmse += hm.rmse;
    report.crps += hm.crps;
    for (std::size_t r = 0; r < rate_count; ++r) {
      report.rates[r].reliability_bias += hm.rates[r].reliability_bias;
      report.rates[r].sharpness += hm.rates[r].sharpness;
      abs_bias += std::fabs(hm.rates[r].reliability_bias);
    }
  }
  const auto hcount = static_cast<double>(horizons.size());
  report.mae /= hcount;
  report.rmse /= hcount;
  report.crps /= hcount;
  for (auto& rm : report.rates) {
    rm.reliability_bias /= hcount;
    rm.sharpness /= hcount;
  }
  report.mean_absolute_reliability = rate_count ? abs_bias / (hcount * static_cast<double>(rate_count)) : 0.0;
  report.horizons = std::move(horizons);
  return report;
}

namespace {

nlohmann::json rates_to_json(const std::vector<RateMetrics>& rates) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& r : rates) {
    a.push_back({{"nominal", r.nominal}, {"reliability_bias", r.reliability_bias}, {"sharpness", r.sharpness}});
  }
  return a;
}

std::vector<RateMetrics> rates_from_json(const nlohmann::json& a) {
  std::vector<RateMetrics> out;
  for (const auto& r : a) {
    out.push_back({r.at("nominal").get<double>(), r.at("reliability_bias").get<double>(), r.at("sharpness").get<double>()});
  }
  return out;
}

}  // namespace

nlohmann::json report_to_json(const EvaluationReport& report) {
  nlohmann::json j;
  j["model"] = report.model;
  j["mae_percent"] = report.mae;
  j["rmse_percent"] = report.rmse;
  j["crps"] = report.crps;
  j["mean_absolute_reliability_percent"] = report.mean_absolute_reliability;
  j["rates"] = rates_to_json(report.rates);
  nlohmann::json hs = nlohmann::json::array();
  for (const auto& h : report.horizons) {
    hs.push_back({{"horizon", h.horizon},
                  {"count", h.count},
                  {"mae_percent", h.mae},
                  {"rmse_percent", h.rmse},
                  {"crps", h.crps},
                  {"rates", rates_to_json(h.rates)}});
  }
  j["horizons"] = std::move(hs);
  return j;
}

EvaluationReport report_from_json(const nlohmann::json& j) {
  try {
    EvaluationReport r;
    r.model = j.at("model").get<std::string>();
    r.mae = j.at("mae_percent").get<double>();
    r.rmse = j.at("rmse_percent").get<double>();
    r.crps = j.at("crps").get<double>();
    r.mean_absolute_reliability = j.at("mean_absolute_reliability_percent").get<double>();
    r.rates = rates_from_json(j.at("rates"));
    for (const auto& h : j.at("horizons")) {
      HorizonMetrics hm;
      hm.horizon = h.at("horizon").get<int>();
      hm.count = h.at("count").get<std::size_t>();
      hm.mae = h.at("mae_percent").get<double>();
      hm.rmse = h.at("rmse_percent").get<double>();
      hm.crps = h.at("crps").get<double>();
      hm.rates = rates_from_json(h.at("rates"));
      r.horizons.push_back(std::move(hm));
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("report: ") + e.what());
  }
}

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_csv(std::ostream& out, const Table& table) {
  auto write_row = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      const std::string& f = row[i];
      if (f.find_first_of(",\"\n\r") == std::string::npos) {
        out << f;
        continue;
      }
      out << '"';
      for (char c : f) {
        if (c == '"') out << '"';
        out << c;
      }
      out << '"';
    }
    out << '\n';
  };
  write_row(table.header);
  for (const auto& r : table.rows) {
    if (r.size() != table.header.size()) throw DomainError("write_csv: row width differs from header");
    write_row(r);
  }
}

Table read_csv(std::istream& in) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::size_t> record_lines;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  std::size_t line = 1;
  std::size_t record_line = 1;
  char c;
  auto end_record = [&] {
    row.push_back(std::move(field));
    field.clear();
    records.push_back(std::move(row));
    record_lines.push_back(record_line);
    row.clear();
    field_started = false;
  };
  while (in.get(c)) {
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field.push_back('"');
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    if (c == '"') {
      if (!field.empty()) throw ParseError(line, "quote inside an unquoted field");
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      field_started = true;
    } else if (c == '\r') {
      continue;
    } else if (c == '\n') {
      end_record();
      ++line;
      record_line = line;
    } else {
      field.push_back(c);
      field_started = true;
    }
  }
  if (quoted) throw ParseError(line, "unterminated quoted field");
  if (field_started || !row.empty()) end_record();
  if (records.empty()) throw ParseError(1, "missing header row");
  Table t;
  t.header = std::move(records.front());
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].size() != t.header.size()) {
      throw ParseError(record_lines[i], "expected " + std::to_string(t.header.size()) + " fields, found " +
                                            std::to_string(records[i].size()));
    }
    t.rows.push_back(std::move(records[i]));
  }
  return t;
}

Table comparison_table(std::span<const EvaluationReport> reports) {
  Table t{{"model", "mae_percent", "rmse_percent", "crps", "mean_absolute_reliability_percent"}, {}};
  for (const auto& r : reports) {
    t.rows.push_back({r.model, format_number(r.mae), format_number(r.rmse), format_number(r.crps),
                      format_number(r.mean_absolute_reliability)});
  }
  return t;
}

Table reliability_by_rate_table(std::span<const EvaluationReport> reports) {
  Table t{{"model", "nominal", "reliability_bias_percent"}, {}};
  for (const auto& r : reports) {
    for (const auto& rm : r.rates) t.rows.push_back({r.model, format_number(rm.nominal), format_number(rm.reliability_bias)});
  }
  return t;
}

Table sharpness_by_rate_table(std::span<const EvaluationReport> reports) {
  Table t{{"model", "nominal", "sharpness"}, {}};
  for (const auto& r : reports) {
    for (const auto& rm : r.rates) t.rows.push_back({r.model, format_number(rm.nominal), format_number(rm.sharpness)});
  }
  return t;
}

Table crps_by_horizon_table(std::span<const EvaluationReport> reports) {
  Table t{{"model", "horizon", "crps"}, {}};
  for (const auto& r : reports) {
    for (const auto& h : r.horizons) t.rows.push_back({r.model, std::to_string(h.horizon), format_number(h.crps)});
  }
  return t;
}

Table reliability_by_horizon_table(std::span<const EvaluationReport> reports) {
  Table t{{"model", "horizon", "nominal", "reliability_bias_percent"}, {}};
  for (const auto& r : reports) {
    for (const auto& h : r.horizons) {
      for (const auto& rm : h.rates) {
        t.rows.push_back({r.model, std::to_string(h.horizon), format_number(rm.nominal), format_number(rm.reliability_bias)});
      }
    }
  }
  return t;
}

Table sharpness_by_horizon_table(std::span<const EvaluationReport> reports) {
  Table t{{"model", "horizon", "nominal", "sharpness"}, {}};
  for (const auto& r : reports) {
    for (const auto& h : r.horizons) {
      for (const auto& rm : h.rates) {
        t.rows.push_back({r.model, std::to_string(h.horizon), format_number(rm.nominal), format_number(rm.sharpness)});
      }
    }
  }
  return t;
}

}  // namespace mmcast
