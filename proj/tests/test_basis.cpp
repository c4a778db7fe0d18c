#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "slopecp/basis.hpp"

using namespace slopecp;

namespace {

TemperaturePanel panel_from(const Eigen::MatrixXd& y) {
  std::vector<std::string> ids;
  for (Eigen::Index i = 0; i < y.rows(); ++i) ids.push_back("s" + std::to_string(i));
  return TemperaturePanel(y, Mask::Constant(y.rows(), y.cols(), true), 0, ids);
}

}  // namespace

TEST(Fourier, PointValues) {
  EXPECT_DOUBLE_EQ(fourier_value(1, 0.0, 365.25), 1.0);
  EXPECT_NEAR(fourier_value(2, 365.25 / 4.0, 365.25), 1.0, 1e-15);
  EXPECT_NEAR(fourier_value(1, 365.25, 365.25), 1.0, 1e-15);
  // odd ell = 3 completes two cycles per period
  EXPECT_NEAR(fourier_value(3, 365.25 / 4.0, 365.25), -1.0, 1e-15);
}

TEST(Fourier, MatrixMatchesDefinition) {
  const auto tb = build_fourier(50, 5, 30.0);
  ASSERT_EQ(tb.H.rows(), 50);
  ASSERT_EQ(tb.H.cols(), 5);
  constexpr double pi = std::numbers::pi;
  for (int t = 1; t <= 50; ++t)
    for (int ell = 1; ell <= 5; ++ell) {
      const double expected = ell % 2 ? std::cos((ell + 1) * pi * t / 30.0) : std::sin(ell * pi * t / 30.0);
      EXPECT_NEAR(tb.H(t - 1, ell - 1), expected, 1e-14);
    }
  for (int ell = 0; ell < 5; ++ell) EXPECT_GT(tb.H.col(ell).cwiseAbs().maxCoeff(), 0.5);
}

TEST(Fourier, EvenColumnsHaveZeroMeanOverWholePeriods) {
  const auto tb = build_fourier(3 * 40, 8, 40.0);
  for (int ell = 2; ell <= 8; ell += 2) EXPECT_NEAR(tb.H.col(ell - 1).mean(), 0.0, 1e-6);
}

TEST(Fourier, RejectsBadArguments) {
  EXPECT_THROW(build_fourier(10, 0, 365.25), ValidationError);
  EXPECT_THROW(build_fourier(10, 2, 0.0), ValidationError);
  EXPECT_THROW(build_fourier(10, 2, -1.0), ValidationError);
}

TEST(Residuals, LinearSignalGivesZero) {
  const auto ts = scaled_time(300);
  Eigen::MatrixXd y(1, 300);
  for (int t = 0; t < 300; ++t) y(0, t) = 2.0 - 3.5 * ts(t);
  const auto r = residuals_for_eof(panel_from(y), build_fourier(300, 4, 365.25));
  EXPECT_LT(r.cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Residuals, SeasonalSignalGivesZero) {
  const auto tb = build_fourier(730, 4, 365.25);
  Eigen::Vector4d c(3.0, -1.0, 0.5, 2.0);
  Eigen::MatrixXd y = (tb.H * c).transpose();
  const auto r = residuals_for_eof(panel_from(y), tb);
  EXPECT_LT(r.cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Residuals, NoiseVarianceRecovered) {
  const int n = 5000;
  const auto tb = build_fourier(n, 4, 365.25);
  const auto ts = scaled_time(n);
  std::mt19937_64 rng(8);
  std::normal_distribution<double> nd(0.0, 1.0);
  Eigen::MatrixXd y(1, n);
  for (int t = 0; t < n; ++t) y(0, t) = 1.0 + 0.7 * ts(t) + 4.0 * tb.H(t, 0) - 2.0 * tb.H(t, 1) + nd(rng);
  const auto r = residuals_for_eof(panel_from(y), tb);
  const double var = r.squaredNorm() / (n - 1);
  EXPECT_NEAR(var, 1.0, 0.05);
}

TEST(Residuals, MissingCellsAreNaNAndRankDeficiencyThrows) {
  Eigen::MatrixXd y = Eigen::MatrixXd::Random(1, 40);
  Mask m = Mask::Constant(1, 40, true);
  m(0, 5) = false;
  const TemperaturePanel p(y, m, 0, {"a"}, 0.9);
  const auto r = residuals_for_eof(p, build_fourier(40, 2, 10.0));
  EXPECT_TRUE(std::isnan(r(0, 5)));
  EXPECT_FALSE(std::isnan(r(0, 6)));

  Mask sparse = Mask::Constant(1, 40, false);
  sparse(0, 0) = sparse(0, 1) = sparse(0, 2) = true;
  const TemperaturePanel q(y, sparse, 0, {"thin"}, 0.0);
  EXPECT_THROW(residuals_for_eof(q, build_fourier(40, 4, 10.0)), NumericalError);
}

TEST(Eof, IdenticalRows) {
  Eigen::MatrixXd r(2, 100);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  for (int t = 0; t < 100; ++t) r(0, t) = r(1, t) = nd(rng);
  const auto sb = build_eof(r, 1);
  EXPECT_NEAR(sb.correlation(0, 1), 1.0, 1e-12);
  EXPECT_NEAR(sb.eigenvalues(0), 2.0, 1e-10);
  EXPECT_NEAR(sb.eigenvalues(1), 0.0, 1e-10);
  EXPECT_NEAR(sb.B(0, 0), 1.0 / std::sqrt(2.0), 1e-10);
  EXPECT_NEAR(sb.B(1, 0), 1.0 / std::sqrt(2.0), 1e-10);
}

TEST(Eof, UncorrelatedRows) {
  const int n = 200000;
  Eigen::MatrixXd r(2, n);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> nd;
  for (Eigen::Index i = 0; i < r.size(); ++i) r.data()[i] = nd(rng);
  const auto sb = build_eof(r, 2);
  EXPECT_NEAR(sb.eigenvalues(0), 1.0, 0.02);
  EXPECT_NEAR(sb.eigenvalues(1), 1.0, 0.02);
  for (int k = 0; k < 2; ++k) {
    Eigen::Index arg = 0;
    sb.B.col(k).cwiseAbs().maxCoeff(&arg);
    EXPECT_GT(sb.B(arg, k), 0.0);
  }
}

TEST(Eof, FullDecompositionIsOrthogonal) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd r(5, 300);
  for (Eigen::Index i = 0; i < r.size(); ++i) r.data()[i] = nd(rng);
  r.row(1) += 0.8 * r.row(0);
  r.row(4) -= 0.5 * r.row(2);
  const auto sb = build_eof(r, 5);
  EXPECT_LT((sb.B * sb.B.transpose() - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT((sb.B.transpose() * sb.B - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_NEAR(sb.eigenvalues.sum(), 5.0, 1e-8);
  for (Eigen::Index k = 1; k < 5; ++k) EXPECT_GE(sb.eigenvalues(k - 1), sb.eigenvalues(k));
  const auto sb2 = build_eof(r, 2);
  EXPECT_LT((sb2.B.transpose() * sb2.B - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Eof, PairwiseCompleteCorrelation) {
  // Independent re-computation over the overlapping cells only.
  Eigen::MatrixXd r(2, 8);
  r << 1, 2, NAN, 4, 5, 7, 1, 0,  //
      2, 1, 3, NAN, 6, 6, 2, 1;
  const auto c = pairwise_correlation(r);
  std::vector<double> a, b;
  for (int t = 0; t < 8; ++t)
    if (!std::isnan(r(0, t)) && !std::isnan(r(1, t))) {
      a.push_back(r(0, t));
      b.push_back(r(1, t));
    }
  double ma = 0, mb = 0;
  for (std::size_t k = 0; k < a.size(); ++k) ma += a[k], mb += b[k];
  ma /= a.size();
  mb /= b.size();
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    sab += (a[k] - ma) * (b[k] - mb);
    saa += (a[k] - ma) * (a[k] - ma);
    sbb += (b[k] - mb) * (b[k] - mb);
  }
  EXPECT_NEAR(c(0, 1), sab / std::sqrt(saa * sbb), 1e-12);
  EXPECT_DOUBLE_EQ(c(0, 0), 1.0);
}

TEST(Eof, Errors) {
  Eigen::MatrixXd r = Eigen::MatrixXd::Random(3, 20);
  EXPECT_THROW(build_eof(r, 4), ValidationError);
  EXPECT_THROW(build_eof(r, 0), ValidationError);
  r.row(1).setConstant(2.0);
  EXPECT_THROW(build_eof(r, 1), std::runtime_error);
}

TEST(SelectL, RuleOnMseSequence) {
  EXPECT_EQ(select_L_from_mse({2, 4, 6, 8, 10}, {100, 90, 89.5, 89.3, 89.2}), 6);
  EXPECT_EQ(select_L_from_mse({2, 4, 6, 8, 10}, {100, 80, 60, 40, 20}), 10);
  EXPECT_EQ(select_L_from_mse({2, 4}, {100, 99.5}), 4);
  EXPECT_THROW(select_L_from_mse({2}, {1.0}), ValidationError);
  EXPECT_THROW(select_L(panel_from(Eigen::MatrixXd::Random(1, 50)), {4}), ValidationError);
}

TEST(SelectL, FindsSeasonalOrderOnPanel) {
  // Two seasonal harmonics plus noise: the MSE stops improving after L = 4.
  const int n = 3000;
  const auto tb = build_fourier(n, 4, 365.25);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd y(2, n);
  for (int i = 0; i < 2; ++i)
    for (int t = 0; t < n; ++t) y(i, t) = 10 * tb.H(t, 0) + 3 * tb.H(t, 1) + 5 * tb.H(t, 2) - 4 * tb.H(t, 3) + nd(rng);
  EXPECT_EQ(select_L(panel_from(y)), 6);
}

TEST(SelectK, CumulativeFractionRule) {
  EXPECT_EQ(select_K(Eigen::Vector2d(2, 0), 0.9), 1);
  EXPECT_EQ(select_K(Eigen::Vector3d(4, 3, 1), 0.9), 3);
  EXPECT_EQ(select_K(Eigen::Vector3d(4, 3, 1), 0.875), 2);
  EXPECT_THROW(select_K(Eigen::VectorXd(0)), ValidationError);
  EXPECT_THROW(select_K(Eigen::Vector2d(1, 2)), ValidationError);
}

TEST(Kronecker, CompositionIdentity) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::MatrixXd B(4, 2), H(10, 3);
    for (Eigen::Index i = 0; i < B.size(); ++i) B.data()[i] = u(rng);
    for (Eigen::Index i = 0; i < H.size(); ++i) H.data()[i] = u(rng);
    const Eigen::MatrixXd lhs = kronecker(B, Eigen::MatrixXd::Identity(10, 10)) * kronecker(Eigen::MatrixXd::Identity(2, 2), H);
    const Eigen::MatrixXd rhs = kronecker(B, H);
    EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);
    for (int i = 0; i < 4; ++i)
      for (int k = 0; k < 2; ++k)
        for (int t = 0; t < 10; ++t)
          for (int l = 0; l < 3; ++l) EXPECT_EQ(rhs(i * 10 + t, k * 3 + l), B(i, k) * H(t, l));
  }
}

TEST(BuildBases, ExportLoadRoundTrip) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd y(3, 800);
  for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = nd(rng);
  const auto p = panel_from(y);
  BasisOptions opt;
  opt.fixed_L = 4;
  opt.fixed_K = 2;
  const auto bs = build_bases(p, opt);
  EXPECT_EQ(bs.L(), 4);
  EXPECT_EQ(bs.K(), 2);
  const auto dir = (std::filesystem::temp_directory_path() / "slopecp_bases_rt").string();
  export_bases(bs, dir);
  const auto back = load_bases(dir);
  EXPECT_EQ(back.K(), 2);
  EXPECT_EQ(back.L(), 4);
  EXPECT_EQ(back.temporal.period, 365.25);
  EXPECT_TRUE(back.temporal.H == bs.temporal.H);
  EXPECT_TRUE(back.spatial.B == bs.spatial.B);
}
