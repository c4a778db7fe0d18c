#ifndef SLOPECP_MEAN_MODEL_HPP
#define SLOPECP_MEAN_MODEL_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "slopecp/error.hpp"
#include "slopecp/panel.hpp"

namespace slopecp {

/// Number of slope change points at each location.
struct ChangePointConfig {
  std::vector<int> q;

  ChangePointConfig() = default;
  explicit ChangePointConfig(std::vector<int> counts) : q(std::move(counts)) {}

  static ChangePointConfig zeros(std::size_t m) { return ChangePointConfig(std::vector<int>(m, 0)); }

  std::size_t locations() const { return q.size(); }
  int total() const { return std::accumulate(q.begin(), q.end(), 0); }
  /// Columns of the block design: an intercept and q_i + 1 slopes per location.
  int design_columns() const { return 2 * static_cast<int>(q.size()) + total(); }

  void validate(int q_max, std::size_t m) const {
    detail::require(q.size() == m, "config '" + str() + "' has " + std::to_string(q.size()) +
                                       " entries but the panel has " + std::to_string(m) + " locations");
    for (std::size_t i = 0; i < q.size(); ++i)
      detail::require(q[i] >= 0 && q[i] <= q_max, "config '" + str() + "': location " + std::to_string(i) +
                                                      " has " + std::to_string(q[i]) +
                                                      " change points, allowed 0.." + std::to_string(q_max));
  }

  std::string str() const {
    std::string s;
    for (std::size_t i = 0; i < q.size(); ++i) s += (i ? "," : "") + std::to_string(q[i]);
    return s;
  }

  static ChangePointConfig parse(const std::string& text) {
    ChangePointConfig c;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      tok = csv::trim(tok);
      detail::require(!tok.empty() && tok.find_first_not_of("0123456789") == std::string::npos,
                      "bad change-point config '" + text + "'");
      c.q.push_back(std::stoi(tok));
    }
    detail::require(!c.q.empty(), "empty change-point config");
    return c;
  }

  friend bool operator==(const ChangePointConfig&, const ChangePointConfig&) = default;
  friend auto operator<=>(const ChangePointConfig&, const ChangePointConfig&) = default;
};

/// Change-point prior support on days 1..N: bound < tau_1,
/// tau_j + gap <= tau_{j+1}, tau_q < N - bound.
struct KnotSupport {
  double bound = 2000.0;
  double gap = 2000.0;
  Eigen::Index n_days = 0;

  bool contains(std::span<const double> tau) const {
    const double upper = static_cast<double>(n_days) - bound;
    for (std::size_t j = 0; j < tau.size(); ++j) {
      if (!(tau[j] > bound) || !(tau[j] < upper)) return false;
      if (j > 0 && tau[j] < tau[j - 1] + gap) return false;
    }
    return true;
  }

  /// tau_1 ~ U(bound, N - bound), tau_j | tau_{j-1} ~ U(tau_{j-1} + gap, N - bound).
  double log_density(std::span<const double> tau) const {
    if (!contains(tau)) return -std::numeric_limits<double>::infinity();
    const double upper = static_cast<double>(n_days) - bound;
    double lp = 0.0;
    for (std::size_t j = 0; j < tau.size(); ++j) {
      const double lo = j == 0 ? bound : tau[j - 1] + gap;
      lp -= std::log(upper - lo);
    }
    return lp;
  }

  /// Evenly spread starting knots, strictly inside the support.
  std::vector<double> initial(int q) const {
    const double slack = static_cast<double>(n_days) - 2.0 * bound - gap * std::max(0, q - 1);
    detail::require(q == 0 || slack > 0.0, "change-point support is empty for " + std::to_string(q) +
                                               " change points (N=" + std::to_string(n_days) + ")");
    std::vector<double> tau(static_cast<std::size_t>(q));
    for (int j = 0; j < q; ++j) tau[static_cast<std::size_t>(j)] = bound + gap * j + slack * (j + 1) / (q + 1);
    return tau;
  }
};

/// Knots rounded up to a whole day and mapped onto the t* scale.
inline double knot_star(double tau, Eigen::Index n) { return scale_day(std::ceil(tau), static_cast<std::size_t>(n)); }

/// Continuous hinge design for one location, written into `X` (N x (q+2)).
/// Columns: 1, min(t*, k_1), clamp(t* - k_{j-1}, 0, k_j - k_{j-1}), max(0, t* - k_q),
/// so beta_1..beta_{q+1} are the slopes of consecutive segments.
inline void fill_design(std::span<const double> tau, const Eigen::VectorXd& t_star, Eigen::Ref<Eigen::MatrixXd> X) {
  const auto n = t_star.size();
  const auto q = static_cast<Eigen::Index>(tau.size());
  X.col(0).setOnes();
  if (q == 0) {
    X.col(1) = t_star;
    return;
  }
  std::vector<double> ks(tau.size());
  for (std::size_t j = 0; j < tau.size(); ++j) ks[j] = knot_star(tau[j], n);
  X.col(1) = t_star.array().min(ks[0]);
  for (Eigen::Index j = 1; j < q; ++j) {
    const double lo = ks[static_cast<std::size_t>(j - 1)];
    const double width = ks[static_cast<std::size_t>(j)] - lo;
    X.col(j + 1) = (t_star.array() - lo).max(0.0).min(width);
  }
  X.col(q + 1) = (t_star.array() - ks.back()).max(0.0);
}

inline Eigen::MatrixXd build_design(int q, std::span<const double> tau, const Eigen::VectorXd& t_star) {
  const auto n = t_star.size();
  detail::require(q >= 0 && static_cast<std::size_t>(q) == tau.size(),
                  "design needs " + std::to_string(q) + " knots, got " + std::to_string(tau.size()));
  for (std::size_t j = 0; j < tau.size(); ++j) {
    detail::require(std::isfinite(tau[j]) && tau[j] > 0.0 && tau[j] <= static_cast<double>(n),
                    "knot " + std::to_string(tau[j]) + " outside days 1.." + std::to_string(n));
    if (j > 0) detail::require(tau[j] > tau[j - 1], "knots must be strictly increasing");
  }
  Eigen::MatrixXd X(n, q + 2);
  fill_design(tau, t_star, X);
  return X;
}

inline Eigen::VectorXd eval_mean(const Eigen::MatrixXd& X, const Eigen::VectorXd& beta) {
  detail::require(X.cols() == beta.size(), "design has " + std::to_string(X.cols()) + " columns but beta has " +
                                               std::to_string(beta.size()) + " entries");
  return X * beta;
}

/// Block-diagonal NM x (2M+Q) design kept as its diagonal blocks.
class BlockDesign {
 public:
  explicit BlockDesign(std::vector<Eigen::MatrixXd> blocks) : blocks_(std::move(blocks)) {
    detail::require(!blocks_.empty(), "block design needs at least one location");
    for (const auto& b : blocks_)
      detail::require(b.rows() == blocks_.front().rows(), "location designs disagree on N");
    offsets_.push_back(0);
    for (const auto& b : blocks_) offsets_.push_back(offsets_.back() + b.cols());
  }

  Eigen::Index rows() const { return blocks_.front().rows() * static_cast<Eigen::Index>(blocks_.size()); }
  Eigen::Index cols() const { return offsets_.back(); }
  const Eigen::MatrixXd& block(std::size_t i) const { return blocks_[i]; }
  Eigen::Index column_offset(std::size_t i) const { return offsets_[i]; }
  std::size_t locations() const { return blocks_.size(); }

  Eigen::MatrixXd dense() const {
    const auto n = blocks_.front().rows();
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(rows(), cols());
    for (std::size_t i = 0; i < blocks_.size(); ++i)
      d.block(static_cast<Eigen::Index>(i) * n, offsets_[i], n, blocks_[i].cols()) = blocks_[i];
    return d;
  }

  Eigen::Index rank() const {
    Eigen::Index r = 0;
    for (const auto& b : blocks_) r += Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(b).rank();
    return r;
  }

 private:
  std::vector<Eigen::MatrixXd> blocks_;
  std::vector<Eigen::Index> offsets_;
};

inline BlockDesign assemble_block_design(std::vector<Eigen::MatrixXd> designs) { return BlockDesign(std::move(designs)); }

}  // namespace slopecp

#endif
