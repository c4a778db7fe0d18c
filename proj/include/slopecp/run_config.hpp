#ifndef SLOPECP_RUN_CONFIG_HPP
#define SLOPECP_RUN_CONFIG_HPP

#include <string>
#include <vector>

#include "json.hpp"
#include "slopecp/basis.hpp"
#include "slopecp/diagnostics.hpp"
#include "slopecp/panel.hpp"
#include "slopecp/sampler.hpp"
#include "slopecp/selection.hpp"

namespace slopecp {

/// Every tunable of a run. Defaults are the published protocol; `desk` scales
/// the knot bounds, the SD ceiling and the chain length to a 2,000-day panel.
struct RunConfig {
  Protocol protocol;
  Priors priors;
  ScamOptions scam;
  Thresholds thresholds;
  BasisOptions basis;
  ColumnSchema schema;
  int q_max = 2;
  Strategy strategy = Strategy::forward;
  bool continue_on_nonconvergence = false;
  int jobs = 1;
  double max_condition = 1e10;
  /// Posterior mean-process draws written per fit, and the day stride of each.
  long realizations = 50;
  long day_stride = 1;

  static RunConfig desk() {
    RunConfig c;
    c.protocol.iterations = 12000;
    c.protocol.burn_in = 2000;
    c.protocol.thin = 5;
    c.priors.bound = 200.0;
    c.priors.gap = 200.0;
    c.thresholds.tau_sd_ceiling = 140.0;
    return c;
  }

  static RunConfig profile(const std::string& name) {
    if (name == "paper") return {};
    if (name == "desk") return desk();
    throw ValidationError("unknown profile '" + name + "' (paper, desk)");
  }

  SelectionOptions selection() const {
    SelectionOptions o;
    o.q_max = q_max;
    o.strategy = strategy;
    o.continue_on_nonconvergence = continue_on_nonconvergence;
    o.jobs = jobs;
    o.master_seed = protocol.seed;
    o.protocol = protocol;
    o.priors = priors;
    o.scam = scam;
    o.thresholds = thresholds;
    o.max_condition = max_condition;
    return o;
  }

  void validate() const {
    protocol.validate();
    detail::require(priors.beta_variance > 0 && priors.alpha_variance > 0, "prior variances must be positive");
    detail::require(priors.a_sigma > 1.0, "a_sigma must exceed 1");
    detail::require(priors.b_sigma > 0.0, "b_sigma must be positive");
    detail::require(priors.bound >= 0.0 && priors.gap >= 0.0, "b_bound and delta_gap must be nonnegative");
    detail::require(q_max >= 1, "q_max must be at least 1");
    detail::require(jobs >= 1, "jobs must be at least 1");
    detail::require(thresholds.ess_floor >= 0.0 && thresholds.tau_sd_ceiling > 0.0, "thresholds out of range");
    detail::require(basis.period > 0.0, "fourier_period must be positive");
    detail::require(basis.L_candidates.size() >= 2 || basis.fixed_L > 0, "L_candidates needs at least 2 entries");
    detail::require(basis.eof_threshold > 0.0 && basis.eof_threshold <= 1.0, "eof_threshold must lie in (0, 1]");
    detail::require(realizations >= 0 && day_stride >= 1, "realizations >= 0 and day_stride >= 1 required");
  }
};

inline nlohmann::json to_json(const RunConfig& c) {
  return {{"iterations", c.protocol.iterations},
          {"burn_in", c.protocol.burn_in},
          {"thin", c.protocol.thin},
          {"seed", c.protocol.seed},
          {"beta_variance", c.priors.beta_variance},
          {"alpha_variance", c.priors.alpha_variance},
          {"a_sigma", c.priors.a_sigma},
          {"b_sigma", c.priors.b_sigma},
          {"b_bound", c.priors.bound},
          {"delta_gap", c.priors.gap},
          {"scam_scale", c.scam.scale},
          {"scam_epsilon", c.scam.epsilon},
          {"scam_warmup", c.scam.warmup},
          {"scam_initial_sd", c.scam.initial_sd},
          {"scam_adapt_after_burn_in", c.scam.adapt_after_burn_in},
          {"ess_floor", c.thresholds.ess_floor},
          {"tau_sd_ceiling", c.thresholds.tau_sd_ceiling},
          {"geweke_band", c.thresholds.geweke_band},
          {"fourier_period", c.basis.period},
          {"L_candidates", c.basis.L_candidates},
          {"L", c.basis.fixed_L},
          {"eof_threshold", c.basis.eof_threshold},
          {"K", c.basis.fixed_K},
          {"min_completeness", c.schema.min_completeness},
          {"date_column", c.schema.date_column},
          {"value_column", c.schema.value_column},
          {"location_column", c.schema.location_column},
          {"q_max", c.q_max},
          {"strategy", to_string(c.strategy)},
          {"continue_on_nonconvergence", c.continue_on_nonconvergence},
          {"jobs", c.jobs},
          {"max_condition", c.max_condition},
          {"realizations", c.realizations},
          {"day_stride", c.day_stride}};
}

/// Overlays the keys present in `j` onto `c`. Unknown keys and wrongly typed
/// values raise a ValidationError naming the key.
inline RunConfig apply_json(RunConfig c, const nlohmann::json& j) {
  detail::require(j.is_object(), "run config must be a JSON object");
  const auto known = to_json(c);
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.contains(it.key()) && it.key() != "profile")
      throw ValidationError("run config: unknown key '" + it.key() + "'");
  auto field = [&j](const char* name, auto& target) {
    if (!j.contains(name)) return;
    try {
      target = j.at(name).get<std::decay_t<decltype(target)>>();
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("run config key '") + name + "': " + e.what());
    }
  };
  field("iterations", c.protocol.iterations);
  field("burn_in", c.protocol.burn_in);
  field("thin", c.protocol.thin);
  field("seed", c.protocol.seed);
  field("beta_variance", c.priors.beta_variance);
  field("alpha_variance", c.priors.alpha_variance);
  field("a_sigma", c.priors.a_sigma);
  field("b_sigma", c.priors.b_sigma);
  field("b_bound", c.priors.bound);
  field("delta_gap", c.priors.gap);
  field("scam_scale", c.scam.scale);
  field("scam_epsilon", c.scam.epsilon);
  field("scam_warmup", c.scam.warmup);
  field("scam_initial_sd", c.scam.initial_sd);
  field("scam_adapt_after_burn_in", c.scam.adapt_after_burn_in);
  field("ess_floor", c.thresholds.ess_floor);
  field("tau_sd_ceiling", c.thresholds.tau_sd_ceiling);
  field("geweke_band", c.thresholds.geweke_band);
  field("fourier_period", c.basis.period);
  field("L_candidates", c.basis.L_candidates);
  field("L", c.basis.fixed_L);
  field("eof_threshold", c.basis.eof_threshold);
  field("K", c.basis.fixed_K);
  field("min_completeness", c.schema.min_completeness);
  field("date_column", c.schema.date_column);
  field("value_column", c.schema.value_column);
  field("location_column", c.schema.location_column);
  field("q_max", c.q_max);
  if (j.contains("strategy")) {
    std::string s;
    field("strategy", s);
    c.strategy = parse_strategy(s);
  }
  field("continue_on_nonconvergence", c.continue_on_nonconvergence);
  field("jobs", c.jobs);
  field("max_condition", c.max_condition);
  field("realizations", c.realizations);
  field("day_stride", c.day_stride);
  return c;
}

}  // namespace slopecp

#endif
