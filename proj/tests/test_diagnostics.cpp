#include <gtest/gtest.h>

#include <random>

#include "slopecp/diagnostics.hpp"
#include "slopecp/synth.hpp"

using namespace slopecp;

namespace {

std::vector<double> ar1(double rho, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<double> x(n);
  double v = nd(rng) / std::sqrt(1.0 - rho * rho);
  for (auto& e : x) {
    v = rho * v + nd(rng);
    e = v;
  }
  return x;
}

std::vector<double> gaussian(std::size_t n, double mu, double sd, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(mu, sd);
  std::vector<double> x(n);
  for (auto& e : x) e = nd(rng);
  return x;
}

ModelSpec small_spec(const SynthResult& g, const ChangePointConfig& cfg) {
  ModelSpec spec;
  spec.panel = std::make_shared<const TemperaturePanel>(g.panel);
  spec.bases = std::make_shared<const BasisSet>(g.bases);
  spec.config = cfg;
  spec.priors.bound = g.scenario.bound;
  spec.priors.gap = g.scenario.gap;
  return spec;
}

}  // namespace

TEST(Ess, IndependentDrawsNearS) {
  const auto x = gaussian(20000, 0, 1, 1);
  const auto e = ess(x);
  EXPECT_FALSE(e.degenerate);
  EXPECT_NEAR(e.value / 20000.0, 1.0, 0.2);
}

TEST(Ess, Ar1MatchesTheory) {
  for (double rho : {0.5, 0.9}) {
    const auto x = ar1(rho, 100000, 3);
    const double want = 100000.0 * (1 - rho) / (1 + rho);
    EXPECT_NEAR(ess(x).value / want, 1.0, 0.15) << "rho " << rho;
  }
}

TEST(Ess, ConstantTraceIsDegenerate) {
  const std::vector<double> x(500, 4.2);
  const auto e = ess(x);
  EXPECT_TRUE(e.degenerate);
  EXPECT_THROW(ess(std::vector<double>(50, 1.0)), ValidationError);
}

TEST(Ess, NeverFarAboveS) {
  // Corpus of positively correlated traces, like sampler output.
  for (double rho : {0.2, 0.5, 0.8, 0.95})
    for (std::uint64_t seed = 0; seed < 10; ++seed)
      for (std::size_t n : {500u, 2000u, 24000u}) {
        const auto x = ar1(rho, n, seed);
        EXPECT_LE(ess(x).value, 1.2 * static_cast<double>(n)) << rho << " " << seed << " " << n;
      }
}

TEST(Geweke, IndependentDrawsAreSmall) {
  int inside = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed)
    if (std::abs(geweke(gaussian(5000, 2, 1, 100 + seed)).value) < 1.96) ++inside;
  EXPECT_GE(inside, 32);
}

TEST(Geweke, DetectsShift) {
  auto x = gaussian(5000, 0, 1, 8);
  for (std::size_t k = 0; k < 500; ++k) x[k] += 5.0;
  EXPECT_GT(std::abs(geweke(x).value), 10.0);
}

TEST(Geweke, ConstantIsDegenerate) {
  const auto z = geweke(std::vector<double>(2000, 1.0));
  EXPECT_TRUE(z.degenerate);
  EXPECT_THROW(geweke(std::vector<double>(999, 1.0)), ValidationError);
}

TEST(Geweke, AffineInvariant) {
  const auto x = ar1(0.6, 4000, 21);
  std::vector<double> y(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) y[k] = 3.0 * x[k] - 7.0;
  EXPECT_NEAR(geweke(x).value, geweke(y).value, 1e-8);
}

TEST(Overlap, IdenticalSamples) {
  const auto a = gaussian(2000, 0, 1, 4);
  EXPECT_GE(overlap_index(a, a), 0.95);
}

TEST(Overlap, SeparatedSamples) {
  const auto a = gaussian(500, 0, 1, 4);
  const auto b = gaussian(500, 20, 1, 5);
  EXPECT_LT(overlap_index(a, b), 0.01);
}

TEST(Overlap, SymmetricAndAffineInvariant) {
  const auto a = gaussian(300, 0, 1, 6);
  const auto b = gaussian(300, 1, 1.5, 7);
  const double o = overlap_index(a, b);
  EXPECT_NEAR(o, overlap_index(b, a), 1e-12);
  std::vector<double> a2, b2;
  for (double v : a) a2.push_back(40.0 * v + 1e4);
  for (double v : b) b2.push_back(40.0 * v + 1e4);
  EXPECT_NEAR(o, overlap_index(a2, b2), 1e-6);
  EXPECT_GT(o, 0.3);
  EXPECT_LT(o, 0.9);
  EXPECT_THROW(overlap_index(std::vector<double>{1.0}, a), ValidationError);
}

TEST(Gate, ReferenceVectors) {
  const Thresholds th;
  EXPECT_TRUE(convergence_gate(309, 20000, 1154, th).pass);
  EXPECT_FALSE(convergence_gate(9.36, 24000, 1154, th).pass);
  EXPECT_FALSE(convergence_gate(400, 24000, 2500, th).pass);
  EXPECT_TRUE(convergence_gate(240, 24000, 2499.9, th).pass);
  const auto v = convergence_gate(9.36, 24000, 3000, th);
  EXPECT_EQ(v.failing.size(), 2u);
  EXPECT_FALSE(convergence_gate(std::numeric_limits<double>::quiet_NaN(), 24000, 0, th).pass);
}

class DicFixture : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    SynthScenario sc;
    sc.seed = 404;
    sc.missing_fraction = 0.02;
    g_ = new SynthResult(generate(sc));
    spec_ = new ModelSpec(small_spec(*g_, sc.config));
    s_ = new PosteriorSamples(run_chain(*spec_, Protocol{1500, 500, 2, 9}));
  }
  static void TearDownTestSuite() {
    delete s_;
    delete spec_;
    delete g_;
  }
  static SynthResult* g_;
  static ModelSpec* spec_;
  static PosteriorSamples* s_;
};
SynthResult* DicFixture::g_ = nullptr;
ModelSpec* DicFixture::spec_ = nullptr;
PosteriorSamples* DicFixture::s_ = nullptr;

TEST_F(DicFixture, IdentityAndBruteForce) {
  const auto d = dic(*s_, *spec_);
  EXPECT_NEAR(d.dic, 2.0 * d.mean_deviance - d.deviance_at_mean, 1e-8 * std::abs(d.dic));
  EXPECT_NEAR(d.p_d, d.mean_deviance - d.deviance_at_mean, 1e-9 * std::abs(d.dic));

  // Re-sum the deviance cell by cell, independent of the stored log-likelihoods.
  const auto& p = *spec_->panel;
  const auto& H = spec_->bases->temporal.H;
  const auto& B = spec_->bases->spatial.B;
  auto deviance = [&](const Eigen::VectorXd& beta, const Eigen::VectorXd& alpha, double s2,
                      const std::vector<std::vector<double>>& tau) {
    double sse = 0.0;
    Eigen::Index off = 0;
    const Eigen::Index L = H.cols();
    for (Eigen::Index i = 0; i < p.locations(); ++i) {
      const int q = spec_->config.q[static_cast<std::size_t>(i)];
      for (Eigen::Index t = 0; t < p.days(); ++t) {
        if (!p.observed()(i, t)) continue;
        const double ts = 2.0 * t / static_cast<double>(p.days() - 1) - 1.0;
        // beta_1 runs up to the first knot, later slopes over the time spent in their segment
        std::vector<double> knots;
        for (int j = 0; j < q; ++j)
          knots.push_back(2.0 * (std::ceil(tau[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) - 1.0) /
                          static_cast<double>(p.days() - 1) - 1.0);
        knots.push_back(std::numeric_limits<double>::infinity());
        double mu = beta(off) + beta(off + 1) * std::min(ts, knots[0]);
        for (int seg = 1; seg <= q; ++seg) {
          const double a = knots[static_cast<std::size_t>(seg) - 1], b = knots[static_cast<std::size_t>(seg)];
          mu += beta(off + 1 + seg) * std::clamp(ts - a, 0.0, b - a);
        }
        for (Eigen::Index k = 0; k < B.cols(); ++k)
          for (Eigen::Index l = 0; l < L; ++l) mu += B(i, k) * H(t, l) * alpha(k * L + l);
        sse += (p.values()(i, t) - mu) * (p.values()(i, t) - mu);
      }
      off += q + 2;
    }
    const double n = static_cast<double>(p.observed_count());
    return n * std::log(2.0 * std::numbers::pi * s2) + sse / s2;
  };
  double dbar = 0.0;
  for (Eigen::Index k = 0; k < s_->size(); ++k) dbar += deviance(s_->beta(k), s_->alpha(k), s_->sigma2(k), s_->tau(k));
  dbar /= static_cast<double>(s_->size());
  const Eigen::RowVectorXd m = s_->draws.colwise().mean();
  std::vector<std::vector<double>> tbar(4);
  for (Eigen::Index j = 0; j < s_->n_tau; ++j)
    tbar[static_cast<std::size_t>(s_->knot_location[static_cast<std::size_t>(j)])].push_back(
        std::ceil(m(s_->tau_offset() + j)));
  const double dhat = deviance(m.head(s_->n_beta).transpose(), m.segment(s_->n_beta, s_->n_alpha).transpose(),
                               m(s_->sigma2_column()), tbar);
  EXPECT_NEAR(d.mean_deviance, dbar, 1e-7 * std::abs(dbar));
  EXPECT_NEAR(d.deviance_at_mean, dhat, 1e-7 * std::abs(dhat));
  EXPECT_GT(d.p_d, 0.0);
}

TEST_F(DicFixture, IdenticalDrawsGiveZeroPd) {
  PosteriorSamples c = *s_;
  for (Eigen::Index k = 1; k < c.size(); ++k) {
    c.draws.row(k) = c.draws.row(0);
    c.loglik(k) = c.loglik(0);
  }
  for (Eigen::Index j = 0; j < c.n_tau; ++j) c.draws.col(c.tau_offset() + j).setConstant(std::ceil(c.draws(0, c.tau_offset() + j)));
  c.loglik.setConstant(log_likelihood(*spec_, c.beta(0), c.alpha(0), c.sigma2(0), c.tau(0)));
  EXPECT_NEAR(dic(c, *spec_).p_d, 0.0, 1e-6);
}

TEST_F(DicFixture, ReportIsConsistent) {
  const auto r = make_report(*s_, *spec_);
  EXPECT_EQ(r.saved, 500);
  EXPECT_EQ(r.ess.size(), static_cast<std::size_t>(s_->draws.cols()));
  EXPECT_EQ(r.tau_sd.size(), 4u);
  EXPECT_EQ(r.geweke.size(), 0u);
  EXPECT_EQ(r.converged, convergence_gate(r, r.thresholds).pass);
  EXPECT_NEAR(r.dic, 2.0 * r.mean_deviance - r.deviance_at_mean, 1e-8 * std::abs(r.dic));
  EXPECT_GT(r.condition_number, 1.0);
  const auto j = to_json(r);
  EXPECT_EQ(j["parameters"].size(), r.names.size());
  EXPECT_EQ(j["change_points"].size(), 4u);

  const auto head = summarize(*s_, {}, 50);
  EXPECT_TRUE(std::isnan(head.min_ess));
  EXPECT_FALSE(head.converged);
  EXPECT_TRUE(std::isnan(head.dic));
}
