#ifndef SLOPECP_TRACE_IO_HPP
#define SLOPECP_TRACE_IO_HPP

#include <Eigen/Dense>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "slopecp/csv.hpp"
#include "slopecp/mean_model.hpp"
#include "slopecp/sampler.hpp"

namespace slopecp::io {

namespace fs = std::filesystem;

/// Metadata carried on the first line of a trace file.
inline nlohmann::json trace_metadata(const PosteriorSamples& s, Eigen::Index n_days,
                                     const nlohmann::json& extra = nlohmann::json::object()) {
  nlohmann::json j{{"format", "slopecp-trace-1"},
                   {"config", s.config.q},
                   {"protocol",
                    {{"iterations", s.protocol.iterations},
                     {"burn_in", s.protocol.burn_in},
                     {"thin", s.protocol.thin},
                     {"seed", s.protocol.seed}}},
                   {"saved", s.protocol.saved()},
                   {"rows", s.size()},
                   {"complete", s.complete},
                   {"n_days", n_days},
                   {"n_beta", s.n_beta},
                   {"n_alpha", s.n_alpha},
                   {"n_tau", s.n_tau},
                   {"knot_location", s.knot_location},
                   {"acceptance", s.acceptance}};
  for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
  return j;
}

/// Writes `dir/trace.csv` (JSON header line, column names, one row per saved
/// draw) and `dir/loglik.csv` (log-likelihood after every iteration, with a
/// flag marking the saved ones).
inline void write_trace(const PosteriorSamples& s, const fs::path& dir, Eigen::Index n_days,
                        const nlohmann::json& extra = nlohmann::json::object()) {
  fs::create_directories(dir);
  {
    auto out = csv::open_out((dir / "trace.csv").string());
    out << "# " << trace_metadata(s, n_days, extra).dump() << '\n';
    for (std::size_t j = 0; j < s.names.size(); ++j) out << (j ? "," : "") << s.names[j];
    out << '\n';
    for (Eigen::Index r = 0; r < s.draws.rows(); ++r) {
      for (Eigen::Index c = 0; c < s.draws.cols(); ++c) out << (c ? "," : "") << csv::format_double(s.draws(r, c));
      out << '\n';
    }
  }
  auto out = csv::open_out((dir / "loglik.csv").string());
  out << "iteration,loglik,saved\n";
  const auto& p = s.protocol;
  for (std::size_t k = 0; k < s.loglik_trace.size(); ++k) {
    const long it = static_cast<long>(k) + 1;
    const bool saved = it > p.burn_in && (it - p.burn_in) % p.thin == 0;
    out << it << ',' << csv::format_double(s.loglik_trace[k]) << ',' << (saved ? 1 : 0) << '\n';
  }
}

struct TraceFile {
  PosteriorSamples samples;
  nlohmann::json meta;
  Eigen::Index n_days = 0;
};

/// Reads a trace written by write_trace. `path` is the run directory or the
/// trace.csv inside it. Throws ValidationError on a truncated or malformed file.
inline TraceFile read_trace(const fs::path& path) {
  const fs::path file = fs::is_directory(path) ? path / "trace.csv" : path;
  const fs::path dir = file.parent_path();
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ValidationError("cannot open trace '" + file.string() + "'");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto where = "trace '" + file.string() + "'";
  if (text.empty() || text.back() != '\n') throw ValidationError("truncated " + where + ": last line incomplete");

  TraceFile tf;
  std::istringstream lines(text);
  std::string line;
  std::getline(lines, line);
  if (line.rfind("# ", 0) != 0) throw ValidationError(where + " lacks its metadata header");
  try {
    tf.meta = nlohmann::json::parse(line.substr(2));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(where + ": bad metadata header: " + e.what());
  }
  auto& s = tf.samples;
  try {
    s.config = ChangePointConfig(tf.meta.at("config").get<std::vector<int>>());
    const auto& p = tf.meta.at("protocol");
    s.protocol = Protocol{p.at("iterations").get<long>(), p.at("burn_in").get<long>(), p.at("thin").get<long>(),
                          p.at("seed").get<std::uint64_t>()};
    s.complete = tf.meta.at("complete").get<bool>();
    s.n_beta = tf.meta.at("n_beta").get<Eigen::Index>();
    s.n_alpha = tf.meta.at("n_alpha").get<Eigen::Index>();
    s.n_tau = tf.meta.at("n_tau").get<Eigen::Index>();
    s.knot_location = tf.meta.at("knot_location").get<std::vector<int>>();
    s.acceptance = tf.meta.at("acceptance").get<std::vector<double>>();
    tf.n_days = tf.meta.at("n_days").get<Eigen::Index>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(where + ": metadata field missing or malformed: " + e.what());
  }
  if (!std::getline(lines, line)) throw ValidationError("truncated " + where + ": no column header");
  s.names = csv::split_line(line);
  const auto cols = static_cast<Eigen::Index>(s.names.size());
  if (cols != s.n_beta + s.n_alpha + 1 + s.n_tau) throw ValidationError(where + ": column count disagrees with metadata");

  std::vector<double> values;
  Eigen::Index rows = 0;
  while (std::getline(lines, line)) {
    if (csv::trim(line).empty()) continue;
    const auto f = csv::split_line(line);
    if (static_cast<Eigen::Index>(f.size()) != cols)
      throw ValidationError("truncated " + where + ": row " + std::to_string(rows + 1) + " has " +
                            std::to_string(f.size()) + " of " + std::to_string(cols) + " fields");
    for (const auto& v : f) {
      double d = 0.0;
      if (!csv::parse_double(v, d)) throw ValidationError(where + ": non-numeric value '" + v + "'");
      values.push_back(d);
    }
    ++rows;
  }
  if (s.complete && rows != s.protocol.saved())
    throw ValidationError("truncated " + where + ": " + std::to_string(rows) + " of " +
                          std::to_string(s.protocol.saved()) + " saved draws present");
  s.draws = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(values.data(), rows, cols);

  const fs::path ll = dir / "loglik.csv";
  if (fs::exists(ll)) {
    const auto m = csv::read_matrix(ll.string(), true);
    std::vector<double> saved;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      s.loglik_trace.push_back(m(r, 1));
      if (m(r, 2) != 0.0) saved.push_back(m(r, 1));
    }
    if (static_cast<Eigen::Index>(saved.size()) != rows)
      throw ValidationError("truncated log-likelihood file '" + ll.string() + "': " + std::to_string(saved.size()) +
                            " saved entries for " + std::to_string(rows) + " draws");
    s.loglik = Eigen::Map<Eigen::VectorXd>(saved.data(), static_cast<Eigen::Index>(saved.size()));
  }
  return tf;
}

/// Mean process X_i(tau) beta_i of location i at saved draw `s`.
inline Eigen::VectorXd mean_realization(const PosteriorSamples& samples, Eigen::Index draw, std::size_t location,
                                        const Eigen::VectorXd& t_star) {
  const int q = samples.config.q[location];
  Eigen::Index off = 0;
  for (std::size_t i = 0; i < location; ++i) off += samples.config.q[i] + 2;
  const Eigen::VectorXd b = samples.draws.row(draw).segment(off, q + 2).transpose();
  const auto tau = samples.tau(draw)[location];
  return eval_mean(build_design(q, tau, t_star), b);
}

/// Draw indices for `count` realizations spread evenly over the saved draws.
inline std::vector<Eigen::Index> realization_draws(Eigen::Index saved, Eigen::Index count) {
  std::vector<Eigen::Index> out;
  count = std::min(count, saved);
  for (Eigen::Index k = 0; k < count; ++k) out.push_back(k * saved / std::max<Eigen::Index>(count, 1));
  return out;
}

/// Long CSV (draw, location_id, day, mu) of posterior mean-process draws.
inline void write_mean_realizations(const PosteriorSamples& samples, const fs::path& path,
                                    const std::vector<std::string>& location_ids, Eigen::Index n_days,
                                    Eigen::Index count = 50, Eigen::Index day_stride = 1) {
  detail::require(day_stride >= 1, "day stride must be >= 1");
  const Eigen::VectorXd ts = scaled_time(static_cast<std::size_t>(n_days));
  auto out = csv::open_out(path.string());
  out << "draw,location_id,day,mu\n";
  for (const auto d : realization_draws(samples.size(), count))
    for (std::size_t i = 0; i < samples.config.locations(); ++i) {
      const auto mu = mean_realization(samples, d, i, ts);
      for (Eigen::Index t = 0; t < n_days; t += day_stride)
        out << d + 1 << ',' << location_ids[i] << ',' << t + 1 << ',' << csv::format_double(mu(t)) << '\n';
    }
}

}  // namespace slopecp::io

#endif
