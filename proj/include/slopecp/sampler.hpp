#ifndef SLOPECP_SAMPLER_HPP
#define SLOPECP_SAMPLER_HPP

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "slopecp/basis.hpp"
#include "slopecp/error.hpp"
#include "slopecp/mean_model.hpp"
#include "slopecp/panel.hpp"
#include "slopecp/scam.hpp"

namespace slopecp {

struct Priors {
  /// Prior covariances; an empty matrix means variance * I.
  double beta_variance = 10000.0;
  Eigen::MatrixXd beta_cov;
  double alpha_variance = 10000.0;
  Eigen::MatrixXd alpha_cov;
  double a_sigma = 10.0;
  double b_sigma = 1.0;
  /// Days excluded at both ends, and minimum spacing between knots.
  double bound = 2000.0;
  double gap = 2000.0;
};

struct Protocol {
  long iterations = 122000;
  long burn_in = 2000;
  long thin = 5;
  std::uint64_t seed = 1;

  long saved() const { return (iterations - burn_in) / thin; }

  void validate() const {
    detail::require(iterations > 0 && burn_in >= 0 && thin > 0, "protocol values must be positive");
    detail::require(iterations > burn_in, "burn-in must be shorter than the chain");
  }
};

/// Everything one chain needs. Panel and bases are shared read-only between fits.
struct ModelSpec {
  std::shared_ptr<const TemperaturePanel> panel;
  std::shared_ptr<const BasisSet> bases;
  ChangePointConfig config;
  Priors priors;
  ScamOptions scam;
  int q_max = 2;
  /// Upper limit on cond([X | B (x) H]) before a fit is refused.
  double max_condition = 1e10;

  Eigen::Index M() const { return panel->locations(); }
  Eigen::Index N() const { return panel->days(); }
  KnotSupport support() const { return {priors.bound, priors.gap, N()}; }

  void validate() const {
    detail::require(panel && bases, "model needs a panel and bases");
    config.validate(q_max, static_cast<std::size_t>(M()));
    detail::require(bases->temporal.H.rows() == N(), "temporal basis has the wrong number of days");
    detail::require(bases->spatial.B.rows() == M(), "spatial basis has the wrong number of locations");
    detail::require(priors.a_sigma > 1.0, "a_sigma must exceed 1");
    detail::require(priors.b_sigma > 0.0, "b_sigma must be positive");
    detail::require(priors.bound >= 0.0 && priors.gap >= 0.0, "bound and gap must be nonnegative");
    detail::require(priors.bound + priors.gap * std::max(0, q_max - 1) + priors.bound < static_cast<double>(N()),
                    "change-point support is empty: 2*bound + gap*(q_max-1) must be < N");
    if (priors.beta_cov.size())
      detail::require(priors.beta_cov.rows() == config.design_columns() && priors.beta_cov.cols() == priors.beta_cov.rows(),
                      "beta prior covariance must be (2M+Q) square");
    if (priors.alpha_cov.size())
      detail::require(priors.alpha_cov.rows() == bases->coefficients() && priors.alpha_cov.cols() == priors.alpha_cov.rows(),
                      "alpha prior covariance must be KL square");
  }
};

/// Thinned post-burn-in draws. Columns: beta (2M+Q), alpha (KL), sigma2, tau (Q).
struct PosteriorSamples {
  ChangePointConfig config;
  Protocol protocol;
  std::vector<std::string> names;
  Eigen::MatrixXd draws;
  /// log f(y | theta) of each saved draw.
  Eigen::VectorXd loglik;
  /// log f(y | theta) after every iteration, burn-in included.
  std::vector<double> loglik_trace;
  /// Acceptance rate of each knot's proposals after burn-in.
  std::vector<double> acceptance;
  Eigen::Index n_beta = 0, n_alpha = 0, n_tau = 0;
  /// Location index of each tau column.
  std::vector<int> knot_location;
  bool complete = true;

  Eigen::Index size() const { return draws.rows(); }
  Eigen::Index alpha_offset() const { return n_beta; }
  Eigen::Index sigma2_column() const { return n_beta + n_alpha; }
  Eigen::Index tau_offset() const { return n_beta + n_alpha + 1; }

  Eigen::VectorXd beta(Eigen::Index s) const { return draws.row(s).head(n_beta).transpose(); }
  Eigen::VectorXd alpha(Eigen::Index s) const { return draws.row(s).segment(n_beta, n_alpha).transpose(); }
  double sigma2(Eigen::Index s) const { return draws(s, sigma2_column()); }
  std::vector<std::vector<double>> tau(Eigen::Index s) const {
    std::vector<std::vector<double>> out(config.locations());
    for (Eigen::Index j = 0; j < n_tau; ++j)
      out[static_cast<std::size_t>(knot_location[static_cast<std::size_t>(j)])].push_back(draws(s, tau_offset() + j));
    return out;
  }
};

/// Thrown when a chain cannot continue; carries the draws saved so far.
class ChainAborted : public NumericalError {
 public:
  ChainAborted(const std::string& what, PosteriorSamples partial)
      : NumericalError(what), partial_(std::move(partial)) {}
  const PosteriorSamples& partial() const { return partial_; }

 private:
  PosteriorSamples partial_;
};

namespace detail {

inline Eigen::MatrixXd prior_precision(const Eigen::MatrixXd& cov, double variance, Eigen::Index dim) {
  if (dim == 0) return Eigen::MatrixXd(0, 0);
  if (cov.size() == 0) {
    require(variance > 0.0, "prior variance must be positive");
    return Eigen::MatrixXd::Identity(dim, dim) / variance;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw ValidationError("prior covariance is not positive definite");
  return llt.solve(Eigen::MatrixXd::Identity(dim, dim));
}

}  // namespace detail

inline std::vector<std::string> parameter_names(const ChangePointConfig& cfg, int K, int L) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < cfg.q.size(); ++i)
    for (int j = 0; j <= cfg.q[i] + 1; ++j) names.push_back("beta_" + std::to_string(i + 1) + "_" + std::to_string(j));
  for (int k = 1; k <= K; ++k)
    for (int l = 1; l <= L; ++l) names.push_back("alpha_" + std::to_string(k) + "_" + std::to_string(l));
  names.emplace_back("sigma2");
  for (std::size_t i = 0; i < cfg.q.size(); ++i)
    for (int j = 1; j <= cfg.q[i]; ++j) names.push_back("tau_" + std::to_string(i + 1) + "_" + std::to_string(j));
  return names;
}

/// Gaussian log-likelihood of the observed cells, evaluated from scratch.
inline double log_likelihood(const ModelSpec& spec, const Eigen::VectorXd& beta, const Eigen::VectorXd& alpha,
                             double sigma2, const std::vector<std::vector<double>>& tau) {
  const auto& panel = *spec.panel;
  const auto& H = spec.bases->temporal.H;
  const auto& B = spec.bases->spatial.B;
  const auto L = H.cols();
  double sse = 0.0;
  Eigen::Index off = 0;
  for (Eigen::Index i = 0; i < spec.M(); ++i) {
    const int q = spec.config.q[static_cast<std::size_t>(i)];
    const Eigen::MatrixXd X = build_design(q, tau[static_cast<std::size_t>(i)], panel.t_star());
    Eigen::VectorXd c = Eigen::VectorXd::Zero(L);
    for (Eigen::Index k = 0; k < B.cols(); ++k) c += B(i, k) * alpha.segment(k * L, L);
    const Eigen::VectorXd fit = X * beta.segment(off, q + 2) + H * c;
    off += q + 2;
    for (Eigen::Index t = 0; t < spec.N(); ++t) {
      if (!panel.observed()(i, t)) continue;
      const double r = panel.values()(i, t) - fit(t);
      sse += r * r;
    }
  }
  const double nobs = static_cast<double>(panel.observed_count());
  return -0.5 * nobs * std::log(2.0 * std::numbers::pi * sigma2) - 0.5 * sse / sigma2;
}

/// Gram matrix of [X | B (x) H] over observed cells at the given knots.
inline Eigen::MatrixXd full_design_gram(const ModelSpec& spec, const std::vector<std::vector<double>>& tau) {
  const auto& panel = *spec.panel;
  const auto& H = spec.bases->temporal.H;
  const auto& B = spec.bases->spatial.B;
  const Eigen::Index p = spec.config.design_columns();
  const Eigen::Index L = H.cols(), K = B.cols();
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(p + K * L, p + K * L);
  Eigen::Index off = 0;
  for (Eigen::Index i = 0; i < spec.M(); ++i) {
    const int q = spec.config.q[static_cast<std::size_t>(i)];
    const Eigen::MatrixXd X = build_design(q, tau[static_cast<std::size_t>(i)], panel.t_star());
    const Eigen::VectorXd w = panel.observed().row(i).transpose().cast<double>();
    const Eigen::MatrixXd WX = w.asDiagonal() * X;
    const Eigen::MatrixXd XtWH = WX.transpose() * H;
    const Eigen::MatrixXd HtWH = H.transpose() * w.asDiagonal() * H;
    G.block(off, off, q + 2, q + 2) = X.transpose() * WX;
    for (Eigen::Index k = 0; k < K; ++k) {
      G.block(off, p + k * L, q + 2, L) = B(i, k) * XtWH;
      G.block(p + k * L, off, L, q + 2) = B(i, k) * XtWH.transpose();
      for (Eigen::Index k2 = 0; k2 < K; ++k2) G.block(p + k * L, p + k2 * L, L, L) += B(i, k) * B(i, k2) * HtWH;
    }
    off += q + 2;
  }
  return G;
}

inline std::vector<std::vector<double>> initial_knots(const ModelSpec& spec) {
  std::vector<std::vector<double>> tau;
  for (int q : spec.config.q) tau.push_back(spec.support().initial(q));
  return tau;
}

inline double design_condition_number(const ModelSpec& spec) {
  return condition_from_gram(full_design_gram(spec, initial_knots(spec)));
}

/// One chain for a fixed change-point configuration: blocked Gibbs for beta,
/// alpha and sigma2, then a SCAM random-walk step for every knot.
class Chain {
 public:
  Chain(const ModelSpec& spec, std::uint64_t seed) : spec_(spec), rng_(seed) {
    spec_.validate();
    const auto& panel = *spec_.panel;
    M_ = spec_.M();
    N_ = spec_.N();
    L_ = spec_.bases->temporal.H.cols();
    K_ = spec_.bases->spatial.B.cols();
    p_ = spec_.config.design_columns();
    const auto& H = spec_.bases->temporal.H;
    const auto& B = spec_.bases->spatial.B;

    y_.resize(static_cast<std::size_t>(M_));
    w_.resize(static_cast<std::size_t>(M_));
    for (Eigen::Index i = 0; i < M_; ++i) {
      y_[static_cast<std::size_t>(i)] = panel.values().row(i).transpose();
      w_[static_cast<std::size_t>(i)] = panel.observed().row(i).transpose().cast<double>();
    }
    n_obs_ = static_cast<double>(panel.observed_count());

    // (B (x) H)' W (B (x) H) = sum_i (b_i b_i') (x) (H' W_i H)
    alpha_gram_ = Eigen::MatrixXd::Zero(K_ * L_, K_ * L_);
    for (Eigen::Index i = 0; i < M_; ++i) {
      const Eigen::MatrixXd G = H.transpose() * w_[static_cast<std::size_t>(i)].asDiagonal() * H;
      for (Eigen::Index k = 0; k < K_; ++k)
        for (Eigen::Index k2 = 0; k2 < K_; ++k2) alpha_gram_.block(k * L_, k2 * L_, L_, L_) += B(i, k) * B(i, k2) * G;
    }
    beta_prec_ = detail::prior_precision(spec_.priors.beta_cov, spec_.priors.beta_variance, p_);
    alpha_prec_ = detail::prior_precision(spec_.priors.alpha_cov, spec_.priors.alpha_variance, K_ * L_);

    tau_ = initial_knots(spec_);
    const double cond = condition_from_gram(full_design_gram(spec_, tau_));
    if (!(cond <= spec_.max_condition))
      throw NumericalError("design [X | B (x) H] is collinear (condition number " + csv::format_double(cond) + ")");

    X_.resize(static_cast<std::size_t>(M_));
    XtWX_.resize(static_cast<std::size_t>(M_));
    mu_.assign(static_cast<std::size_t>(M_), Eigen::VectorXd::Zero(N_));
    phi_.assign(static_cast<std::size_t>(M_), Eigen::VectorXd::Zero(N_));
    for (Eigen::Index i = 0; i < M_; ++i) refresh_design(i);

    beta_ = Eigen::VectorXd::Zero(p_);
    alpha_ = Eigen::VectorXd::Zero(K_ * L_);
    sigma2_ = spec_.priors.b_sigma / (spec_.priors.a_sigma - 1.0);

    const auto sup = spec_.support();
    const double init_sd = spec_.scam.initial_sd > 0.0 ? spec_.scam.initial_sd
                                                       : 0.05 * (static_cast<double>(N_) - 2.0 * sup.bound);
    for (Eigen::Index i = 0; i < M_; ++i)
      for (int j = 0; j < spec_.config.q[static_cast<std::size_t>(i)]; ++j) {
        scam_.emplace_back(spec_.scam, init_sd);
        knot_loc_.push_back(static_cast<int>(i));
      }
  }

  void gibbs_beta() {
    Eigen::MatrixXd prec = beta_prec_;
    Eigen::VectorXd rhs(p_);
    Eigen::Index off = 0;
    for (Eigen::Index i = 0; i < M_; ++i) {
      const auto u = static_cast<std::size_t>(i);
      const Eigen::Index c = X_[u].cols();
      prec.block(off, off, c, c) += XtWX_[u] / sigma2_;
      rhs.segment(off, c) = X_[u].transpose() * (w_[u].cwiseProduct(y_[u] - phi_[u])) / sigma2_;
      off += c;
    }
    beta_ = draw_gaussian(prec, rhs, "beta");
    off = 0;
    for (Eigen::Index i = 0; i < M_; ++i) {
      const auto u = static_cast<std::size_t>(i);
      mu_[u].noalias() = X_[u] * beta_.segment(off, X_[u].cols());
      off += X_[u].cols();
    }
  }

  void gibbs_alpha() {
    if (K_ * L_ == 0) return;
    const auto& H = spec_.bases->temporal.H;
    const auto& B = spec_.bases->spatial.B;
    Eigen::MatrixXd prec = alpha_gram_ / sigma2_ + alpha_prec_;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(K_ * L_);
    for (Eigen::Index i = 0; i < M_; ++i) {
      const auto u = static_cast<std::size_t>(i);
      const Eigen::VectorXd h = H.transpose() * (w_[u].cwiseProduct(y_[u] - mu_[u]));
      for (Eigen::Index k = 0; k < K_; ++k) rhs.segment(k * L_, L_) += B(i, k) * h;
    }
    rhs /= sigma2_;
    alpha_ = draw_gaussian(prec, rhs, "alpha");
    for (Eigen::Index i = 0; i < M_; ++i) {
      Eigen::VectorXd c = Eigen::VectorXd::Zero(L_);
      for (Eigen::Index k = 0; k < K_; ++k) c += B(i, k) * alpha_.segment(k * L_, L_);
      phi_[static_cast<std::size_t>(i)].noalias() = H * c;
    }
  }

  void gibbs_sigma2() {
    double sse = 0.0;
    for (Eigen::Index i = 0; i < M_; ++i) sse += location_sse(i, mu_[static_cast<std::size_t>(i)]);
    const double shape = spec_.priors.a_sigma + 0.5 * n_obs_;
    const double scale = spec_.priors.b_sigma + 0.5 * sse;
    std::gamma_distribution<double> gamma(shape, 1.0 / scale);
    sigma2_ = 1.0 / gamma(rng_);
  }

  /// SCAM updates for every knot, location by location.
  void update_knots() {
    const auto sup = spec_.support();
    std::size_t knot = 0;
    Eigen::Index off = 0;
    for (Eigen::Index i = 0; i < M_; ++i) {
      const auto u = static_cast<std::size_t>(i);
      const auto q = static_cast<std::size_t>(spec_.config.q[u]);
      const Eigen::Index c = static_cast<Eigen::Index>(q) + 2;
      if (q == 0) {
        off += c;
        continue;
      }
      const Eigen::VectorXd beta_i = beta_.segment(off, c);
      double cur_sse = location_sse(i, mu_[u]);
      for (std::size_t j = 0; j < q; ++j, ++knot) {
        auto& comp = scam_[knot];
        std::vector<double> prop = tau_[u];
        prop[j] += comp.proposal_sd() * normal_(rng_);
        const double lp_new = sup.log_density(prop);
        bool accept = false;
        if (std::isfinite(lp_new)) {
          const double lp_old = sup.log_density(tau_[u]);
          double d_loglik = 0.0;
          double new_sse = cur_sse;
          Eigen::MatrixXd Xp;
          Eigen::VectorXd mup;
          const bool moved_day = std::ceil(prop[j]) != std::ceil(tau_[u][j]);
          if (moved_day) {
            Xp.resize(N_, c);
            fill_design(prop, spec_.panel->t_star(), Xp);
            mup.noalias() = Xp * beta_i;
            new_sse = location_sse(i, mup);
            d_loglik = -0.5 * (new_sse - cur_sse) / sigma2_;
          }
          const double log_ratio = d_loglik + lp_new - lp_old;
          accept = log_ratio >= 0.0 || std::log(unif_(rng_)) < log_ratio;
          if (accept) {
            tau_[u] = prop;
            if (moved_day) {
              X_[u] = std::move(Xp);
              XtWX_[u] = X_[u].transpose() * w_[u].asDiagonal() * X_[u];
              mu_[u] = std::move(mup);
              cur_sse = new_sse;
            }
          }
        }
        comp.tally(accept);
        comp.record(tau_[u][j]);
      }
      off += c;
    }
  }

  /// Full sweep; returns log f(y | theta) at the end of it.
  double sweep() {
    gibbs_beta();
    gibbs_alpha();
    gibbs_sigma2();
    update_knots();
    double sse = 0.0;
    for (Eigen::Index i = 0; i < M_; ++i) sse += location_sse(i, mu_[static_cast<std::size_t>(i)]);
    return -0.5 * n_obs_ * std::log(2.0 * std::numbers::pi * sigma2_) - 0.5 * sse / sigma2_;
  }

  PosteriorSamples run(const Protocol& protocol) {
    protocol.validate();
    PosteriorSamples out;
    out.config = spec_.config;
    out.protocol = protocol;
    out.names = parameter_names(spec_.config, static_cast<int>(K_), static_cast<int>(L_));
    out.n_beta = p_;
    out.n_alpha = K_ * L_;
    out.n_tau = static_cast<Eigen::Index>(scam_.size());
    out.knot_location = knot_loc_;
    const Eigen::Index P = static_cast<Eigen::Index>(out.names.size());
    out.draws.resize(protocol.saved(), P);
    out.loglik.resize(protocol.saved());
    out.loglik_trace.reserve(static_cast<std::size_t>(protocol.iterations));

    Eigen::Index s = 0;
    for (long it = 1; it <= protocol.iterations; ++it) {
      double ll = 0.0;
      try {
        ll = sweep();
      } catch (const NumericalError& e) {
        out.draws.conservativeResize(s, P);
        out.loglik.conservativeResize(s);
        out.complete = false;
        throw ChainAborted("chain aborted at iteration " + std::to_string(it) + ": " + e.what(), std::move(out));
      }
      out.loglik_trace.push_back(ll);
      if (it == protocol.burn_in) {
        for (auto& c : scam_) {
          c.reset_tally();
          if (!spec_.scam.adapt_after_burn_in) c.freeze();
        }
      }
      if (it > protocol.burn_in && (it - protocol.burn_in) % protocol.thin == 0 && s < out.draws.rows()) {
        out.draws.row(s) = state_row().transpose();
        out.loglik(s) = ll;
        ++s;
      }
    }
    for (const auto& c : scam_) out.acceptance.push_back(c.acceptance_rate());
    return out;
  }

  Eigen::VectorXd state_row() const {
    Eigen::VectorXd row(p_ + K_ * L_ + 1 + static_cast<Eigen::Index>(scam_.size()));
    row.head(p_) = beta_;
    row.segment(p_, K_ * L_) = alpha_;
    row(p_ + K_ * L_) = sigma2_;
    Eigen::Index o = p_ + K_ * L_ + 1;
    for (const auto& t : tau_)
      for (double v : t) row(o++) = v;
    return row;
  }

  // State access and injection, used by tests that hold parts of the chain fixed.
  const Eigen::VectorXd& beta() const { return beta_; }
  const Eigen::VectorXd& alpha() const { return alpha_; }
  double sigma2() const { return sigma2_; }
  const std::vector<std::vector<double>>& tau() const { return tau_; }
  const std::vector<ScamComponent>& scam() const { return scam_; }
  void set_beta(const Eigen::VectorXd& b) {
    detail::require(b.size() == p_, "beta has the wrong length");
    beta_ = b;
    Eigen::Index off = 0;
    for (Eigen::Index i = 0; i < M_; ++i) {
      const auto u = static_cast<std::size_t>(i);
      mu_[u] = X_[u] * beta_.segment(off, X_[u].cols());
      off += X_[u].cols();
    }
  }
  void set_alpha(const Eigen::VectorXd& a) {
    detail::require(a.size() == K_ * L_, "alpha has the wrong length");
    const auto& H = spec_.bases->temporal.H;
    const auto& B = spec_.bases->spatial.B;
    alpha_ = a;
    for (Eigen::Index i = 0; i < M_; ++i) {
      Eigen::VectorXd c = Eigen::VectorXd::Zero(L_);
      for (Eigen::Index k = 0; k < K_; ++k) c += B(i, k) * alpha_.segment(k * L_, L_);
      phi_[static_cast<std::size_t>(i)] = H * c;
    }
  }
  void set_sigma2(double s2) {
    detail::require(s2 > 0.0, "sigma2 must be positive");
    sigma2_ = s2;
  }
  void set_tau(const std::vector<std::vector<double>>& tau) {
    detail::require(tau.size() == tau_.size(), "tau has the wrong number of locations");
    for (std::size_t i = 0; i < tau.size(); ++i) {
      detail::require(tau[i].size() == tau_[i].size(), "tau has the wrong number of knots");
      detail::require(spec_.support().contains(tau[i]), "tau outside the prior support");
    }
    tau_ = tau;
    for (Eigen::Index i = 0; i < M_; ++i) refresh_design(i);
    set_beta(beta_);
  }

 private:
  void refresh_design(Eigen::Index i) {
    const auto u = static_cast<std::size_t>(i);
    X_[u] = build_design(spec_.config.q[u], tau_[u], spec_.panel->t_star());
    XtWX_[u] = X_[u].transpose() * w_[u].asDiagonal() * X_[u];
  }

  double location_sse(Eigen::Index i, const Eigen::VectorXd& mu) const {
    const auto u = static_cast<std::size_t>(i);
    return (w_[u].array() * (y_[u] - mu - phi_[u]).array().square()).sum();
  }

  /// Draw from N(prec^{-1} rhs, prec^{-1}).
  Eigen::VectorXd draw_gaussian(const Eigen::MatrixXd& prec, const Eigen::VectorXd& rhs, const char* what) {
    Eigen::LLT<Eigen::MatrixXd> llt(prec);
    if (llt.info() != Eigen::Success)
      throw NumericalError(std::string(what) + " full-conditional precision is not positive definite (collinear design)");
    Eigen::VectorXd z(rhs.size());
    for (Eigen::Index k = 0; k < z.size(); ++k) z(k) = normal_(rng_);
    Eigen::VectorXd out = llt.solve(rhs);
    out += llt.matrixU().solve(z);
    if (!out.allFinite()) throw NumericalError(std::string(what) + " draw is not finite");
    return out;
  }

  ModelSpec spec_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> unif_{0.0, 1.0};

  Eigen::Index M_ = 0, N_ = 0, L_ = 0, K_ = 0, p_ = 0;
  double n_obs_ = 0.0;
  std::vector<Eigen::VectorXd> y_, w_;
  Eigen::MatrixXd alpha_gram_, beta_prec_, alpha_prec_;

  std::vector<Eigen::MatrixXd> X_, XtWX_;
  std::vector<Eigen::VectorXd> mu_, phi_;

  Eigen::VectorXd beta_, alpha_;
  double sigma2_ = 1.0;
  std::vector<std::vector<double>> tau_;
  std::vector<ScamComponent> scam_;
  std::vector<int> knot_loc_;
};

inline PosteriorSamples run_chain(const ModelSpec& spec, const Protocol& protocol) {
  Chain chain(spec, protocol.seed);
  return chain.run(protocol);
}

}  // namespace slopecp

#endif
