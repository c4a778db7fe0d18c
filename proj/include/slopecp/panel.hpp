#ifndef SLOPECP_PANEL_HPP
#define SLOPECP_PANEL_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "slopecp/csv.hpp"
#include "slopecp/error.hpp"

namespace slopecp {

using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Days since 1970-01-01.
using DaySerial = long;

inline std::optional<DaySerial> parse_iso_date(std::string_view text) {
  using namespace std::chrono;
  const std::string s = csv::trim(text);
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  int y = 0;
  unsigned m = 0, d = 0;
  for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
    if (s[i] < '0' || s[i] > '9') return std::nullopt;
  y = std::stoi(s.substr(0, 4));
  m = static_cast<unsigned>(std::stoi(s.substr(5, 2)));
  d = static_cast<unsigned>(std::stoi(s.substr(8, 2)));
  const year_month_day ymd{year{y}, month{m}, day{d}};
  if (!ymd.ok()) return std::nullopt;
  return sys_days{ymd}.time_since_epoch().count();
}

inline std::string format_iso_date(DaySerial serial) {
  using namespace std::chrono;
  const year_month_day ymd{sys_days{days{serial}}};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

/// Affine map of day index t = 1..n onto [-1, 1]. Accepts fractional days.
inline double scale_day(double t, std::size_t n) {
  return 2.0 * (t - 1.0) / static_cast<double>(n - 1) - 1.0;
}

inline Eigen::VectorXd scaled_time(std::size_t n) {
  detail::require(n >= 2, "scaled time needs at least 2 days, got " + std::to_string(n));
  Eigen::VectorXd ts(static_cast<Eigen::Index>(n));
  for (std::size_t t = 1; t <= n; ++t) ts(static_cast<Eigen::Index>(t - 1)) = scale_day(static_cast<double>(t), n);
  ts(static_cast<Eigen::Index>(n - 1)) = 1.0;
  return ts;
}

/// Locations x days grid of zero-centered observations on a consecutive-day axis.
class TemperaturePanel {
 public:
  TemperaturePanel() = default;

  /// `raw` holds uncentered values; entries where `observed` is false are ignored.
  /// Locations observed on fewer than `min_completeness` of the days are rejected.
  TemperaturePanel(Eigen::MatrixXd raw, Mask observed, DaySerial first_day,
                   std::vector<std::string> location_ids, double min_completeness = 0.95)
      : raw_(std::move(raw)), observed_(std::move(observed)), first_day_(first_day),
        ids_(std::move(location_ids)) {
    const auto m = raw_.rows();
    const auto n = raw_.cols();
    detail::require(observed_.rows() == m && observed_.cols() == n, "panel mask shape mismatch");
    detail::require(static_cast<Eigen::Index>(ids_.size()) == m, "panel needs one id per location");
    detail::require(m >= 1, "panel has no locations");
    detail::require(n >= 2, "panel needs at least 2 days");

    std::vector<std::string> rejected;
    offsets_.resize(m);
    completeness_.resize(m);
    values_ = Eigen::MatrixXd::Zero(m, n);
    for (Eigen::Index i = 0; i < m; ++i) {
      double sum = 0.0;
      Eigen::Index count = 0;
      for (Eigen::Index t = 0; t < n; ++t) {
        if (!observed_(i, t)) continue;
        detail::require(std::isfinite(raw_(i, t)),
                        "non-finite observation at location '" + ids_[i] + "'");
        sum += raw_(i, t);
        ++count;
      }
      completeness_(i) = static_cast<double>(count) / static_cast<double>(n);
      if (completeness_(i) < min_completeness || count == 0) {
        char buf[64];
        std::snprintf(buf, sizeof buf, " (%.2f%% observed)", 100.0 * completeness_(i));
        rejected.push_back(ids_[i] + buf);
        continue;
      }
      double mean = sum / static_cast<double>(count);
      // second pass removes the rounding residue of the first mean
      double resid = 0.0;
      for (Eigen::Index t = 0; t < n; ++t)
        if (observed_(i, t)) resid += raw_(i, t) - mean;
      mean += resid / static_cast<double>(count);
      offsets_(i) = mean;
      for (Eigen::Index t = 0; t < n; ++t)
        if (observed_(i, t)) values_(i, t) = raw_(i, t) - mean;
    }
    if (!rejected.empty()) {
      std::string msg = "locations below completeness floor " + csv::format_double(min_completeness) + ":";
      for (const auto& r : rejected) msg += " " + r;
      throw ValidationError(msg);
    }
    t_star_ = scaled_time(static_cast<std::size_t>(n));
  }

  Eigen::Index locations() const { return values_.rows(); }
  Eigen::Index days() const { return values_.cols(); }

  /// Zero-centered values; unobserved cells hold 0.
  const Eigen::MatrixXd& values() const { return values_; }
  const Eigen::MatrixXd& raw_values() const { return raw_; }
  const Mask& observed() const { return observed_; }
  const Eigen::VectorXd& t_star() const { return t_star_; }
  const Eigen::VectorXd& offsets() const { return offsets_; }
  const Eigen::VectorXd& completeness() const { return completeness_; }
  const std::vector<std::string>& location_ids() const { return ids_; }
  DaySerial first_day() const { return first_day_; }

  /// Day index 1..N.
  std::vector<long> day_index() const {
    std::vector<long> d(static_cast<std::size_t>(days()));
    for (std::size_t t = 0; t < d.size(); ++t) d[t] = static_cast<long>(t + 1);
    return d;
  }

  Eigen::Index observed_count() const { return observed_.count(); }

 private:
  Eigen::MatrixXd raw_;
  Eigen::MatrixXd values_;
  Mask observed_;
  DaySerial first_day_ = 0;
  std::vector<std::string> ids_;
  Eigen::VectorXd offsets_;
  Eigen::VectorXd completeness_;
  Eigen::VectorXd t_star_;
};

struct ColumnSchema {
  std::string date_column = "date";
  std::string value_column = "value";
  /// Empty: every file holds one location, named after the file stem.
  std::string location_column = "location_id";
  double min_completeness = 0.95;
};

inline std::string sidecar_path(const std::string& csv_path) { return csv_path + ".meta.json"; }

/// Reads one long-format file or several per-location files and aligns them on
/// the union of their date ranges. A canonical-export sidecar, when present,
/// pins the day axis and location order.
inline TemperaturePanel ingest_csv(const std::vector<std::string>& paths, const ColumnSchema& schema = {}) {
  detail::require(!paths.empty(), "no input files");

  std::vector<std::string> order;
  std::map<std::string, std::map<DaySerial, double>> series;
  std::set<std::string> seen;

  for (const auto& path : paths) {
    auto in = csv::open_in(path);
    std::string line;
    std::size_t lineno = 0;
    int date_col = -1, value_col = -1, loc_col = -1;
    const std::string stem = std::filesystem::path(path).stem().string();
    bool header_done = false;
    while (std::getline(in, line)) {
      ++lineno;
      if (csv::trim(line).empty() || line[0] == '#') continue;
      auto f = csv::split_line(line);
      if (!header_done) {
        for (std::size_t j = 0; j < f.size(); ++j) {
          if (f[j] == schema.date_column) date_col = static_cast<int>(j);
          if (f[j] == schema.value_column) value_col = static_cast<int>(j);
          if (!schema.location_column.empty() && f[j] == schema.location_column) loc_col = static_cast<int>(j);
        }
        if (date_col < 0) throw ValidationError(path + ": missing date column '" + schema.date_column + "'");
        if (value_col < 0) throw ValidationError(path + ": missing value column '" + schema.value_column + "'");
        if (!schema.location_column.empty() && loc_col < 0)
          throw ValidationError(path + ": missing location column '" + schema.location_column + "'");
        header_done = true;
        continue;
      }
      const auto where = path + ":" + std::to_string(lineno);
      const int needed = std::max({date_col, value_col, loc_col});
      if (static_cast<int>(f.size()) <= needed) throw ValidationError(where + ": too few fields");
      const std::string loc = loc_col >= 0 ? f[static_cast<std::size_t>(loc_col)] : stem;
      const auto day = parse_iso_date(f[static_cast<std::size_t>(date_col)]);
      if (!day) throw ValidationError(where + ": unparseable date '" + f[static_cast<std::size_t>(date_col)] + "'");
      if (!seen.count(loc)) {
        seen.insert(loc);
        order.push_back(loc);
      }
      auto& s = series[loc];
      if (s.count(*day))
        throw ValidationError(where + ": duplicate entry for location '" + loc + "' on " +
                              format_iso_date(*day));
      const std::string& vtext = f[static_cast<std::size_t>(value_col)];
      double v = 0.0;
      if (vtext.empty() || vtext == "NA" || vtext == "nan") {
        s[*day] = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      if (!csv::parse_double(vtext, v)) throw ValidationError(where + ": unparseable value '" + vtext + "'");
      s[*day] = v;
    }
  }
  detail::require(!order.empty(), "input files contain no observations");

  DaySerial lo = std::numeric_limits<DaySerial>::max();
  DaySerial hi = std::numeric_limits<DaySerial>::min();
  for (const auto& [loc, s] : series) {
    if (s.empty()) continue;
    lo = std::min(lo, s.begin()->first);
    hi = std::max(hi, s.rbegin()->first);
  }

  if (paths.size() == 1 && std::filesystem::exists(sidecar_path(paths.front()))) {
    auto in = csv::open_in(sidecar_path(paths.front()));
    nlohmann::json meta;
    try {
      in >> meta;
      const auto first = parse_iso_date(meta.at("first_date").get<std::string>());
      if (!first) throw ValidationError("bad first_date");
      lo = *first;
      hi = lo + meta.at("N").get<long>() - 1;
      auto ids = meta.at("location_ids").get<std::vector<std::string>>();
      for (const auto& id : order)
        if (std::find(ids.begin(), ids.end(), id) == ids.end())
          throw ValidationError("location '" + id + "' not listed in sidecar");
      order = std::move(ids);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(sidecar_path(paths.front()) + ": " + e.what());
    }
  }

  const Eigen::Index n = hi - lo + 1;
  const auto m = static_cast<Eigen::Index>(order.size());
  Eigen::MatrixXd raw = Eigen::MatrixXd::Zero(m, n);
  Mask obs = Mask::Constant(m, n, false);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (const auto& [day, v] : series[order[static_cast<std::size_t>(i)]]) {
      if (day < lo || day > hi) throw ValidationError("observation outside the sidecar day range");
      if (std::isnan(v)) continue;
      raw(i, day - lo) = v;
      obs(i, day - lo) = true;
    }
  }
  return TemperaturePanel(std::move(raw), std::move(obs), lo, std::move(order), schema.min_completeness);
}

inline TemperaturePanel ingest_csv(const std::string& path, const ColumnSchema& schema = {}) {
  return ingest_csv(std::vector<std::string>{path}, schema);
}

/// Long CSV (location_id,date,value) of raw observed values plus a JSON sidecar
/// with the day range, location order and centering offsets.
inline void export_canonical(const TemperaturePanel& panel, const std::string& path) {
  auto out = csv::open_out(path);
  out << "location_id,date,value\n";
  for (Eigen::Index i = 0; i < panel.locations(); ++i)
    for (Eigen::Index t = 0; t < panel.days(); ++t)
      if (panel.observed()(i, t))
        out << panel.location_ids()[static_cast<std::size_t>(i)] << ',' << format_iso_date(panel.first_day() + t)
            << ',' << csv::format_double(panel.raw_values()(i, t)) << '\n';

  nlohmann::json meta;
  meta["N"] = panel.days();
  meta["M"] = panel.locations();
  meta["first_date"] = format_iso_date(panel.first_day());
  meta["last_date"] = format_iso_date(panel.first_day() + panel.days() - 1);
  meta["location_ids"] = panel.location_ids();
  meta["offsets"] = std::vector<double>(panel.offsets().data(), panel.offsets().data() + panel.offsets().size());
  meta["completeness"] =
      std::vector<double>(panel.completeness().data(), panel.completeness().data() + panel.completeness().size());
  auto side = csv::open_out(sidecar_path(path));
  side << meta.dump(2) << '\n';
}

}  // namespace slopecp

#endif
