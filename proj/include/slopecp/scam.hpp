#ifndef SLOPECP_SCAM_HPP
#define SLOPECP_SCAM_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace slopecp {

struct ScamOptions {
  double scale = 2.4 * 2.4;
  double epsilon = 0.01;
  /// Iterations run at the fixed initial proposal before adaptation starts.
  long warmup = 100;
  /// Initial proposal SD in days; <= 0 picks 5% of the change-point support width.
  double initial_sd = 0.0;
  /// false freezes the proposal at the end of burn-in.
  bool adapt_after_burn_in = true;
};

/// Single-component adaptive Metropolis state for one coordinate:
/// proposal variance scale * (Var(history) + epsilon) once warmed up.
class ScamComponent {
 public:
  ScamComponent() = default;
  ScamComponent(const ScamOptions& opt, double initial_sd) : opt_(opt), initial_sd_(initial_sd) {}

  double proposal_sd() const {
    if (frozen_) return frozen_sd_;
    if (count_ < opt_.warmup || count_ < 2) return initial_sd_;
    return std::sqrt(opt_.scale * (variance() + opt_.epsilon));
  }

  /// Adds the chain's current value to the history (Welford update).
  void record(double x) {
    if (frozen_) return;
    ++count_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(count_);
    m2_ += d * (x - mean_);
  }

  void freeze() {
    frozen_sd_ = proposal_sd();
    frozen_ = true;
  }

  double variance() const { return count_ > 1 ? m2_ / static_cast<double>(count_ - 1) : 0.0; }
  double mean() const { return mean_; }
  long count() const { return count_; }
  long proposals() const { return proposals_; }
  long accepted() const { return accepted_; }
  double acceptance_rate() const { return proposals_ ? static_cast<double>(accepted_) / proposals_ : 0.0; }
  void tally(bool accept) {
    ++proposals_;
    accepted_ += accept ? 1 : 0;
  }
  void reset_tally() { proposals_ = accepted_ = 0; }

 private:
  ScamOptions opt_{};
  double initial_sd_ = 1.0;
  long count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
  long proposals_ = 0;
  long accepted_ = 0;
  bool frozen_ = false;
  double frozen_sd_ = 0.0;
};

/// One SCAM random-walk step on a scalar log density.
template <class LogDensity, class Rng>
bool scam_step(double& x, double& log_px, ScamComponent& comp, const LogDensity& log_density, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double cand = x + comp.proposal_sd() * normal(rng);
  const double lp = log_density(cand);
  bool accept = false;
  if (std::isfinite(lp)) {
    const double log_ratio = lp - log_px;
    accept = log_ratio >= 0.0 || std::log(unif(rng)) < log_ratio;
  }
  if (accept) {
    x = cand;
    log_px = lp;
  }
  comp.tally(accept);
  comp.record(x);
  return accept;
}

}  // namespace slopecp

#endif
