#ifndef SLOPECP_BASIS_HPP
#define SLOPECP_BASIS_HPP

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "slopecp/csv.hpp"
#include "slopecp/error.hpp"
#include "slopecp/panel.hpp"

namespace slopecp {

/// N x L Fourier design evaluated at integer days 1..N.
struct TemporalBasis {
  Eigen::MatrixXd H;
  double period = 365.25;
  int L = 0;
};

/// Leading EOFs of the residual correlation matrix.
struct SpatialBasis {
  Eigen::MatrixXd B;
  Eigen::VectorXd eigenvalues;  // all M, descending
  Eigen::MatrixXd correlation;
  int K = 0;
};

struct BasisSet {
  TemporalBasis temporal;
  SpatialBasis spatial;

  int K() const { return spatial.K; }
  int L() const { return temporal.L; }
  Eigen::Index coefficients() const { return static_cast<Eigen::Index>(K()) * L(); }
};

/// Column `ell` (1-based) of the Fourier basis at day t: odd ell gives
/// cos((ell+1) pi t / A), even ell gives sin(ell pi t / A).
inline double fourier_value(int ell, double t, double period) {
  constexpr double pi = std::numbers::pi;
  if (ell <= 0) return 0.0;
  if (ell % 2 == 1) return std::cos((ell + 1) / period * pi * t);
  return std::sin(ell / period * pi * t);
}

inline TemporalBasis build_fourier(Eigen::Index n, int L, double period) {
  detail::require(L >= 1, "Fourier basis needs L >= 1, got " + std::to_string(L));
  detail::require(period > 0.0, "Fourier period must be positive");
  detail::require(n >= 1, "Fourier basis needs N >= 1");
  TemporalBasis tb;
  tb.period = period;
  tb.L = L;
  tb.H.resize(n, L);
  for (Eigen::Index t = 0; t < n; ++t)
    for (int ell = 1; ell <= L; ++ell) tb.H(t, ell - 1) = fourier_value(ell, static_cast<double>(t + 1), period);
  return tb;
}

/// Residuals of a per-location least-squares fit of intercept + t* + H.
/// Unobserved cells come back as NaN.
inline Eigen::MatrixXd residuals_for_eof(const TemperaturePanel& panel, const TemporalBasis& tb) {
  const auto m = panel.locations();
  const auto n = panel.days();
  detail::require(tb.H.rows() == n, "temporal basis built for a different N");
  const auto p = 2 + tb.H.cols();
  Eigen::MatrixXd out = Eigen::MatrixXd::Constant(m, n, std::numeric_limits<double>::quiet_NaN());
  for (Eigen::Index i = 0; i < m; ++i) {
    std::vector<Eigen::Index> rows;
    for (Eigen::Index t = 0; t < n; ++t)
      if (panel.observed()(i, t)) rows.push_back(t);
    const auto nobs = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd Z(nobs, p);
    Eigen::VectorXd y(nobs);
    for (Eigen::Index r = 0; r < nobs; ++r) {
      const auto t = rows[static_cast<std::size_t>(r)];
      Z(r, 0) = 1.0;
      Z(r, 1) = panel.t_star()(t);
      Z.row(r).tail(tb.H.cols()) = tb.H.row(t);
      y(r) = panel.values()(i, t);
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Z);
    if (nobs < p || qr.rank() < p)
      throw NumericalError("trend + seasonal design is rank deficient at location '" +
                           panel.location_ids()[static_cast<std::size_t>(i)] + "'");
    const Eigen::VectorXd resid = y - Z * qr.solve(y);
    for (Eigen::Index r = 0; r < nobs; ++r) out(i, rows[static_cast<std::size_t>(r)]) = resid(r);
  }
  return out;
}

/// Sum of squared residuals over observed cells.
inline double residual_mse(const Eigen::MatrixXd& residuals) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < residuals.size(); ++i) {
    const double v = residuals.data()[i];
    if (!std::isnan(v)) s += v * v;
  }
  return s;
}

/// Pairwise-complete correlation of the rows of `x` (NaN = missing).
inline Eigen::MatrixXd pairwise_correlation(const Eigen::MatrixXd& x) {
  const auto m = x.rows();
  const auto n = x.cols();
  Eigen::MatrixXd c = Eigen::MatrixXd::Identity(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i; j < m; ++j) {
      double si = 0, sj = 0;
      long cnt = 0;
      for (Eigen::Index t = 0; t < n; ++t) {
        if (std::isnan(x(i, t)) || std::isnan(x(j, t))) continue;
        si += x(i, t);
        sj += x(j, t);
        ++cnt;
      }
      if (cnt < 2) throw NumericalError("fewer than 2 jointly observed days for rows " + std::to_string(i) +
                                        " and " + std::to_string(j));
      const double mi = si / cnt, mj = sj / cnt;
      double sxy = 0, sxx = 0, syy = 0;
      for (Eigen::Index t = 0; t < n; ++t) {
        if (std::isnan(x(i, t)) || std::isnan(x(j, t))) continue;
        const double a = x(i, t) - mi, b = x(j, t) - mj;
        sxy += a * b;
        sxx += a * a;
        syy += b * b;
      }
      if (sxx <= 0.0 || syy <= 0.0)
        throw NumericalError("constant residual row " + std::to_string(sxx <= 0.0 ? i : j) +
                             ": correlation undefined");
      if (i != j) c(i, j) = c(j, i) = sxy / std::sqrt(sxx * syy);
    }
  }
  return c;
}

/// Eigenvectors of the residual correlation matrix, descending eigenvalue order,
/// each column signed so that its largest-magnitude entry is positive.
inline SpatialBasis build_eof(const Eigen::MatrixXd& residuals, int K) {
  const auto m = residuals.rows();
  detail::require(K >= 1 && K <= m, "EOF count K=" + std::to_string(K) + " outside [1, " + std::to_string(m) + "]");
  SpatialBasis sb;
  sb.correlation = pairwise_correlation(residuals);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sb.correlation);
  if (es.info() != Eigen::Success) throw NumericalError("eigen decomposition of the residual correlation failed");
  sb.eigenvalues = es.eigenvalues().reverse();
  Eigen::MatrixXd W = es.eigenvectors().rowwise().reverse();
  for (Eigen::Index k = 0; k < m; ++k) {
    Eigen::Index arg = 0;
    W.col(k).cwiseAbs().maxCoeff(&arg);
    if (W(arg, k) < 0) W.col(k) *= -1.0;
  }
  sb.B = W.leftCols(K);
  sb.K = K;
  return sb;
}

/// First candidate whose MSE improves on its predecessor by less than
/// `rel_tol`; the last candidate when every step improves by more.
inline int select_L_from_mse(const std::vector<int>& candidates, const std::vector<double>& mse,
                             double rel_tol = 0.01) {
  detail::require(candidates.size() >= 2, "L selection needs at least 2 candidates");
  detail::require(mse.size() == candidates.size(), "one MSE per L candidate");
  for (std::size_t c = 1; c < candidates.size(); ++c) {
    detail::require(candidates[c] > candidates[c - 1], "L candidates must be ascending");
    if ((mse[c - 1] - mse[c]) / mse[c - 1] < rel_tol) return candidates[c];
  }
  return candidates.back();
}

inline std::vector<double> mse_by_L(const TemperaturePanel& panel, const std::vector<int>& candidates,
                                    double period) {
  std::vector<double> mse;
  for (int L : candidates) mse.push_back(residual_mse(residuals_for_eof(panel, build_fourier(panel.days(), L, period))));
  return mse;
}

inline int select_L(const TemperaturePanel& panel, const std::vector<int>& candidates = {2, 4, 6, 8, 10},
                    double period = 365.25) {
  detail::require(candidates.size() >= 2, "L selection needs at least 2 candidates");
  return select_L_from_mse(candidates, mse_by_L(panel, candidates, period));
}

/// Smallest K whose leading eigenvalues hold at least `threshold` of the trace.
inline int select_K(const Eigen::VectorXd& eigenvalues, double threshold = 0.90) {
  detail::require(eigenvalues.size() > 0, "K selection needs eigenvalues");
  detail::require(threshold > 0.0 && threshold <= 1.0, "EOF threshold must lie in (0, 1]");
  for (Eigen::Index k = 0; k < eigenvalues.size(); ++k) {
    detail::require(eigenvalues(k) > -1e-8, "eigenvalues must be nonnegative");
    if (k > 0) detail::require(eigenvalues(k) <= eigenvalues(k - 1) + 1e-12, "eigenvalues must be descending");
  }
  const double total = eigenvalues.cwiseMax(0.0).sum();
  double cum = 0.0;
  for (Eigen::Index k = 0; k < eigenvalues.size(); ++k) {
    cum += std::max(eigenvalues(k), 0.0);
    if (cum >= threshold * total * (1.0 - 1e-12)) return static_cast<int>(k + 1);
  }
  return static_cast<int>(eigenvalues.size());
}

inline Eigen::MatrixXd kronecker(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

/// B (x) H: rows ordered location-major (i*N + t), columns (k*L + l).
inline Eigen::MatrixXd spatio_temporal_design(const BasisSet& bases) {
  return kronecker(bases.spatial.B, bases.temporal.H);
}

/// 2-norm condition number from a symmetric Gram matrix A'A.
inline double condition_from_gram(const Eigen::MatrixXd& gram) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return std::sqrt(hi / lo);
}

struct BasisOptions {
  double period = 365.25;
  std::vector<int> L_candidates{2, 4, 6, 8, 10};
  int fixed_L = 0;  // > 0 skips the MSE rule
  double eof_threshold = 0.90;
  int fixed_K = 0;  // > 0 skips the eigenvalue rule
};

/// Picks L, fits the seasonal residuals for that L, then picks K from the EOF spectrum.
inline BasisSet build_bases(const TemperaturePanel& panel, const BasisOptions& opt = {}) {
  BasisSet bs;
  const int L = opt.fixed_L > 0 ? opt.fixed_L : select_L(panel, opt.L_candidates, opt.period);
  bs.temporal = build_fourier(panel.days(), L, opt.period);
  const Eigen::MatrixXd resid = residuals_for_eof(panel, bs.temporal);
  const auto full = build_eof(resid, static_cast<int>(panel.locations()));
  const int K = opt.fixed_K > 0 ? opt.fixed_K : select_K(full.eigenvalues, opt.eof_threshold);
  detail::require(K <= panel.locations(), "fixed K exceeds the number of locations");
  bs.spatial = full;
  bs.spatial.B = full.B.leftCols(K);
  bs.spatial.K = K;
  return bs;
}

/// Writes H.csv, B.csv and eigenvalues.csv into `dir`.
inline void export_bases(const BasisSet& bs, const std::string& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> hh, bh;
  for (int l = 1; l <= bs.L(); ++l) hh.push_back("xi_" + std::to_string(l));
  for (int k = 1; k <= bs.K(); ++k) bh.push_back("eof_" + std::to_string(k));
  csv::write_matrix(dir + "/H.csv", bs.temporal.H, hh);
  csv::write_matrix(dir + "/B.csv", bs.spatial.B, bh);
  csv::write_matrix(dir + "/eigenvalues.csv", bs.spatial.eigenvalues, {"eigenvalue"});
  csv::write_matrix(dir + "/period.csv", Eigen::MatrixXd::Constant(1, 1, bs.temporal.period), {"period"});
}

inline BasisSet load_bases(const std::string& dir) {
  BasisSet bs;
  bs.temporal.H = csv::read_matrix(dir + "/H.csv", true);
  bs.temporal.L = static_cast<int>(bs.temporal.H.cols());
  bs.spatial.B = csv::read_matrix(dir + "/B.csv", true);
  bs.spatial.K = static_cast<int>(bs.spatial.B.cols());
  if (std::filesystem::exists(dir + "/eigenvalues.csv"))
    bs.spatial.eigenvalues = csv::read_matrix(dir + "/eigenvalues.csv", true).col(0);
  if (std::filesystem::exists(dir + "/period.csv"))
    bs.temporal.period = csv::read_matrix(dir + "/period.csv", true)(0, 0);
  detail::require(bs.temporal.L >= 1 && bs.spatial.K >= 1, "empty basis files in " + dir);
  return bs;
}

}  // namespace slopecp

#endif
