#ifndef SLOPECP_DIAGNOSTICS_HPP
#define SLOPECP_DIAGNOSTICS_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "slopecp/error.hpp"
#include "slopecp/sampler.hpp"

namespace slopecp {

struct Estimate {
  double value = 0.0;
  /// Zero-variance input; the value is a convention, not an estimate.
  bool degenerate = false;
};

namespace detail {

inline double mean(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

inline double sample_variance(std::span<const double> x) {
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

/// Yule-Walker AR fit with AIC order choice; returns the spectral density at
/// zero, sigma^2 / (1 - sum(phi))^2, of the demeaned series.
inline double spectrum0_ar(std::span<const double> x) {
  const auto n = x.size();
  const std::size_t order_max = std::min<std::size_t>(n - 1, static_cast<std::size_t>(std::floor(10.0 * std::log10(static_cast<double>(n)))));
  const double m = mean(x);
  std::vector<double> acf(order_max + 1, 0.0);
  for (std::size_t k = 0; k <= order_max; ++k) {
    double s = 0.0;
    for (std::size_t t = k; t < n; ++t) s += (x[t] - m) * (x[t - k] - m);
    acf[k] = s / static_cast<double>(n);
  }
  if (!(acf[0] > 0.0)) return 0.0;

  // Levinson-Durbin
  std::vector<double> phi, best_phi;
  double v = acf[0];
  double best_aic = static_cast<double>(n) * std::log(v);
  double best_v = v;
  for (std::size_t k = 1; k <= order_max; ++k) {
    double num = acf[k];
    for (std::size_t j = 0; j + 1 < k; ++j) num -= phi[j] * acf[k - 1 - j];
    const double kappa = num / v;
    std::vector<double> next(k);
    for (std::size_t j = 0; j + 1 < k; ++j) next[j] = phi[j] - kappa * phi[k - 2 - j];
    next[k - 1] = kappa;
    phi = std::move(next);
    v *= (1.0 - kappa * kappa);
    if (!(v > 0.0)) break;
    const double aic = static_cast<double>(n) * std::log(v) + 2.0 * static_cast<double>(k);
    if (aic < best_aic) {
      best_aic = aic;
      best_phi = phi;
      best_v = v;
    }
  }
  const double var_pred = best_v * static_cast<double>(n) / static_cast<double>(n - (best_phi.size() + 1));
  double sum_phi = 0.0;
  for (double p : best_phi) sum_phi += p;
  return var_pred / ((1.0 - sum_phi) * (1.0 - sum_phi));
}

inline double quantile_sorted(const std::vector<double>& s, double p) {
  const double h = (static_cast<double>(s.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, s.size() - 1);
  return s[lo] + (h - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

/// Silverman's rule of thumb, 0.9 min(sd, IQR/1.34) n^(-1/5).
inline double bandwidth_nrd0(std::span<const double> x) {
  std::vector<double> s(x.begin(), x.end());
  std::sort(s.begin(), s.end());
  const double sd = std::sqrt(sample_variance(x));
  const double iqr = quantile_sorted(s, 0.75) - quantile_sorted(s, 0.25);
  double lo = std::min(sd, iqr / 1.34);
  if (!(lo > 0.0)) lo = sd;
  if (!(lo > 0.0)) lo = std::abs(s.front());
  if (!(lo > 0.0)) lo = 1.0;
  return 0.9 * lo * std::pow(static_cast<double>(x.size()), -0.2);
}

}  // namespace detail

/// Batch-means effective sample size, batch length floor(sqrt(S)).
inline Estimate ess(std::span<const double> trace) {
  const auto S = trace.size();
  detail::require(S >= 100, "ESS needs at least 100 draws, got " + std::to_string(S));
  const double var = detail::sample_variance(trace);
  if (!(var > 0.0)) return {static_cast<double>(S), true};
  const auto b = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(S))));
  const auto a = S / b;
  std::vector<double> bm(a);
  for (std::size_t k = 0; k < a; ++k) {
    double s = 0.0;
    for (std::size_t t = k * b; t < (k + 1) * b; ++t) s += trace[t];
    bm[k] = s / static_cast<double>(b);
  }
  const double grand = detail::mean(bm);
  double ss = 0.0;
  for (double v : bm) ss += (v - grand) * (v - grand);
  const double lrv = static_cast<double>(b) * ss / static_cast<double>(a - 1);
  if (!(lrv > 0.0)) return {static_cast<double>(S), true};
  return {static_cast<double>(S) * var / lrv, false};
}

/// Geweke z-score: first 10% vs last 50%, AR spectral variance estimates.
inline Estimate geweke(std::span<const double> trace, double first = 0.1, double last = 0.5) {
  const auto S = trace.size();
  detail::require(S >= 1000, "Geweke diagnostic needs at least 1000 draws, got " + std::to_string(S));
  const auto na = static_cast<std::size_t>(std::floor(first * static_cast<double>(S)));
  const auto nb = static_cast<std::size_t>(std::floor(last * static_cast<double>(S)));
  const auto a = trace.subspan(0, na);
  const auto b = trace.subspan(S - nb, nb);
  const double va = detail::spectrum0_ar(a) / static_cast<double>(na);
  const double vb = detail::spectrum0_ar(b) / static_cast<double>(nb);
  if (!(va + vb > 0.0)) return {0.0, true};
  return {(detail::mean(a) - detail::mean(b)) / std::sqrt(va + vb), false};
}

/// Area under min(f_a, f_b) of Gaussian kernel density estimates on a shared grid.
inline double overlap_index(std::span<const double> a, std::span<const double> b, int grid_points = 512) {
  detail::require(a.size() >= 2 && b.size() >= 2, "overlap index needs at least 2 points per sample");
  const double ha = detail::bandwidth_nrd0(a);
  const double hb = detail::bandwidth_nrd0(b);
  const double lo = std::min(*std::min_element(a.begin(), a.end()), *std::min_element(b.begin(), b.end())) - 3.0 * std::max(ha, hb);
  const double hi = std::max(*std::max_element(a.begin(), a.end()), *std::max_element(b.begin(), b.end())) + 3.0 * std::max(ha, hb);
  const double dx = (hi - lo) / (grid_points - 1);
  auto kde = [](std::span<const double> x, double h, double at) {
    double s = 0.0;
    for (double v : x) {
      const double z = (at - v) / h;
      s += std::exp(-0.5 * z * z);
    }
    return s / (static_cast<double>(x.size()) * h * std::sqrt(2.0 * std::numbers::pi));
  };
  double area = 0.0;
  double prev = 0.0;
  for (int g = 0; g < grid_points; ++g) {
    const double at = lo + g * dx;
    const double v = std::min(kde(a, ha, at), kde(b, hb, at));
    if (g > 0) area += 0.5 * (prev + v) * dx;
    prev = v;
  }
  return std::clamp(area, 0.0, 1.0);
}

struct DicResult {
  double dic = 0.0;
  double p_d = 0.0;
  double mean_deviance = 0.0;
  double deviance_at_mean = 0.0;
};

/// Posterior means of beta, alpha, sigma2 and knots (knot means rounded up to a day)
/// over the first `n` draws.
struct PosteriorMean {
  Eigen::VectorXd beta, alpha;
  double sigma2 = 0.0;
  std::vector<std::vector<double>> tau;
};

inline PosteriorMean posterior_mean(const PosteriorSamples& s, Eigen::Index n) {
  const Eigen::VectorXd m = s.draws.topRows(n).colwise().mean().transpose();
  PosteriorMean pm;
  pm.beta = m.head(s.n_beta);
  pm.alpha = m.segment(s.n_beta, s.n_alpha);
  pm.sigma2 = m(s.sigma2_column());
  pm.tau.assign(s.config.locations(), {});
  for (Eigen::Index j = 0; j < s.n_tau; ++j)
    pm.tau[static_cast<std::size_t>(s.knot_location[static_cast<std::size_t>(j)])].push_back(
        std::ceil(m(s.tau_offset() + j)));
  return pm;
}

/// DIC over the first `n_draws` saved draws (all when 0).
inline DicResult dic(const PosteriorSamples& s, const ModelSpec& spec, Eigen::Index n_draws = 0) {
  const Eigen::Index n = n_draws > 0 ? std::min(n_draws, s.size()) : s.size();
  detail::require(n >= 2, "DIC needs at least 2 saved draws");
  double sum = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) sum += -2.0 * s.loglik(k);
  DicResult r;
  r.mean_deviance = sum / static_cast<double>(n);
  const auto pm = posterior_mean(s, n);
  r.deviance_at_mean = -2.0 * log_likelihood(spec, pm.beta, pm.alpha, pm.sigma2, pm.tau);
  r.p_d = r.mean_deviance - r.deviance_at_mean;
  r.dic = r.p_d + r.mean_deviance;
  return r;
}

struct Thresholds {
  /// Minimum ESS as a fraction of saved draws.
  double ess_floor = 0.01;
  /// Knot posterior SDs must be strictly below this (days).
  double tau_sd_ceiling = 2500.0;
  double geweke_band = 3.0;
};

struct FitReport {
  ChangePointConfig config;
  std::uint64_t seed = 0;
  Eigen::Index saved = 0;
  double dic = 0.0, p_d = 0.0, mean_deviance = 0.0, deviance_at_mean = 0.0;
  std::vector<std::string> names;
  std::vector<double> ess;
  std::vector<bool> ess_degenerate;
  std::vector<double> geweke;  // empty when the trace is shorter than 1000
  std::vector<std::string> tau_names;
  std::vector<double> tau_sd;
  std::vector<double> tau_mean;
  std::vector<double> acceptance;
  double min_ess = 0.0;
  double max_tau_sd = 0.0;
  double condition_number = 0.0;
  bool converged = false;
  std::vector<std::string> failing;
  Thresholds thresholds;
};

struct GateVerdict {
  bool pass = false;
  std::vector<std::string> failing;
};

inline GateVerdict convergence_gate(double min_ess, Eigen::Index saved, double max_tau_sd, const Thresholds& th) {
  GateVerdict v;
  if (!(min_ess >= th.ess_floor * static_cast<double>(saved)))
    v.failing.push_back("min ESS " + csv::format_double(min_ess) + " below " + csv::format_double(th.ess_floor) +
                        " x " + std::to_string(saved) + " saved draws");
  if (!(max_tau_sd < th.tau_sd_ceiling))
    v.failing.push_back("max change-point SD " + csv::format_double(max_tau_sd) + " not below " +
                        csv::format_double(th.tau_sd_ceiling) + " days");
  v.pass = v.failing.empty();
  return v;
}

inline GateVerdict convergence_gate(const FitReport& r, const Thresholds& th) {
  return convergence_gate(r.min_ess, r.saved, r.max_tau_sd, th);
}

/// ESS, Geweke and knot summaries of a run, without the model. DIC fields stay
/// NaN except the mean deviance, which only needs the stored log-likelihoods.
/// `n_draws` > 0 restricts everything to the leading draws.
inline FitReport summarize(const PosteriorSamples& s, const Thresholds& th = {}, Eigen::Index n_draws = 0) {
  const Eigen::Index n = n_draws > 0 ? std::min(n_draws, s.size()) : s.size();
  detail::require(n >= 2, "a report needs at least 2 saved draws");
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  FitReport r;
  r.config = s.config;
  r.seed = s.protocol.seed;
  r.saved = n;
  r.thresholds = th;
  r.names = s.names;
  r.acceptance = s.acceptance;
  r.dic = r.p_d = r.deviance_at_mean = r.condition_number = nan;
  r.mean_deviance = s.loglik.size() >= n ? -2.0 * s.loglik.head(n).mean() : nan;
  r.min_ess = std::numeric_limits<double>::infinity();
  std::vector<double> col(static_cast<std::size_t>(n));
  for (Eigen::Index c = 0; c < s.draws.cols(); ++c) {
    for (Eigen::Index k = 0; k < n; ++k) col[static_cast<std::size_t>(k)] = s.draws(k, c);
    const auto e = n >= 100 ? ess(col) : Estimate{nan, true};
    r.ess.push_back(e.value);
    r.ess_degenerate.push_back(e.degenerate);
    r.min_ess = std::isnan(e.value) || std::isnan(r.min_ess) ? nan : std::min(r.min_ess, e.value);
    if (n >= 1000) r.geweke.push_back(geweke(col).value);
    if (c >= s.tau_offset()) {
      r.tau_names.push_back(s.names[static_cast<std::size_t>(c)]);
      r.tau_mean.push_back(detail::mean(col));
      r.tau_sd.push_back(std::sqrt(detail::sample_variance(col)));
      r.max_tau_sd = std::max(r.max_tau_sd, r.tau_sd.back());
    }
  }
  const auto v = convergence_gate(r, th);
  r.converged = v.pass;
  r.failing = v.failing;
  return r;
}

/// Full convergence summary of a run including DIC and the design condition number.
inline FitReport make_report(const PosteriorSamples& s, const ModelSpec& spec, const Thresholds& th = {},
                             Eigen::Index n_draws = 0) {
  auto r = summarize(s, th, n_draws);
  const auto d = dic(s, spec, r.saved);
  r.dic = d.dic;
  r.p_d = d.p_d;
  r.mean_deviance = d.mean_deviance;
  r.deviance_at_mean = d.deviance_at_mean;
  r.condition_number = design_condition_number(spec);
  return r;
}

inline nlohmann::json to_json(const FitReport& r) {
  nlohmann::json j;
  j["config"] = r.config.q;
  j["seed"] = r.seed;
  j["saved_draws"] = r.saved;
  j["dic"] = r.dic;
  j["p_d"] = r.p_d;
  j["mean_deviance"] = r.mean_deviance;
  j["deviance_at_mean"] = r.deviance_at_mean;
  j["min_ess"] = r.min_ess;
  j["max_tau_sd"] = r.max_tau_sd;
  j["condition_number"] = r.condition_number;
  j["converged"] = r.converged;
  j["failing"] = r.failing;
  j["thresholds"] = {{"ess_floor", r.thresholds.ess_floor},
                     {"tau_sd_ceiling", r.thresholds.tau_sd_ceiling},
                     {"geweke_band", r.thresholds.geweke_band}};
  nlohmann::json params = nlohmann::json::array();
  for (std::size_t k = 0; k < r.names.size(); ++k) {
    nlohmann::json p{{"name", r.names[k]}, {"ess", r.ess[k]}};
    if (r.ess_degenerate[k]) p["degenerate"] = true;
    if (!r.geweke.empty()) p["geweke"] = r.geweke[k];
    params.push_back(p);
  }
  j["parameters"] = params;
  nlohmann::json knots = nlohmann::json::array();
  for (std::size_t k = 0; k < r.tau_names.size(); ++k)
    knots.push_back({{"name", r.tau_names[k]},
                     {"mean", r.tau_mean[k]},
                     {"sd", r.tau_sd[k]},
                     {"acceptance", k < r.acceptance.size() ? r.acceptance[k] : 0.0}});
  j["change_points"] = knots;
  if (!r.geweke.empty()) {
    bool inside = true;
    for (double z : r.geweke) inside = inside && std::abs(z) < r.thresholds.geweke_band;
    j["geweke_within_band"] = inside;
  }
  return j;
}

}  // namespace slopecp

#endif
