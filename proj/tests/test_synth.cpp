#include <gtest/gtest.h>

#include "slopecp/sampler.hpp"
#include "slopecp/synth.hpp"

using namespace slopecp;

namespace {

Eigen::VectorXd truth_mean(const SynthResult& g, Eigen::Index i) {
  const auto& sc = g.scenario;
  const auto u = static_cast<std::size_t>(i);
  const auto ts = scaled_time(static_cast<std::size_t>(sc.N));
  const Eigen::Map<const Eigen::VectorXd> b(sc.beta[u].data(), static_cast<Eigen::Index>(sc.beta[u].size()));
  Eigen::VectorXd mu = build_design(sc.config.q[u], sc.tau[u], ts) * b;
  for (int k = 0; k < sc.K; ++k)
    for (int l = 0; l < sc.L; ++l)
      mu += g.bases.spatial.B(i, k) * sc.alpha[static_cast<std::size_t>(k * sc.L + l)] * g.bases.temporal.H.col(l);
  return mu;
}

}  // namespace

TEST(Synth, NoiselessPanelIsTheMean) {
  SynthScenario sc;
  sc.sigma2 = 0.0;
  const auto g = generate(sc);
  for (Eigen::Index i = 0; i < sc.M; ++i) {
    const Eigen::VectorXd raw = g.panel.values().row(i).transpose().array() + g.panel.offsets()(i);
    EXPECT_LT((raw - truth_mean(g, i)).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Synth, PiecewiseLinearWithoutSeasonality) {
  SynthScenario sc;
  sc.sigma2 = 0.0;
  sc.alpha.assign(sc.alpha.size(), 0.0);
  const auto g = generate(sc);
  const auto ts = scaled_time(static_cast<std::size_t>(sc.N));
  const double dt = ts(1) - ts(0);
  // location 4 has slopes 0.5, 3.0, -1.0 around days 600 and 1400
  const auto row = g.panel.values().row(3);
  EXPECT_NEAR((row(100) - row(99)) / dt, 0.5, 1e-8);
  EXPECT_NEAR((row(1000) - row(999)) / dt, 3.0, 1e-8);
  EXPECT_NEAR((row(1900) - row(1899)) / dt, -1.0, 1e-8);
}

TEST(Synth, PaperScaleDimensions) {
  const auto sc = paper_scale_scenario();
  EXPECT_NO_THROW(sc.validate());
  EXPECT_EQ(sc.M, 8);
  EXPECT_EQ(sc.N, 22000);
  EXPECT_EQ(sc.config.design_columns(), 2 * 8 + 5);
  EXPECT_EQ(sc.K * sc.L, 4);
  const auto g = generate(sc);
  EXPECT_EQ(g.panel.locations(), 8);
  EXPECT_EQ(g.panel.days(), 22000);
  EXPECT_EQ(g.bases.temporal.H.cols(), 4);
  EXPECT_EQ(g.bases.spatial.B.cols(), 1);
}

TEST(Synth, NoiseVariance) {
  SynthScenario sc;
  sc.sigma2 = 2.5;
  sc.seed = 77;
  const auto g = generate(sc);
  double ss = 0.0;
  long n = 0;
  for (Eigen::Index i = 0; i < sc.M; ++i) {
    const Eigen::VectorXd raw = g.panel.values().row(i).transpose().array() + g.panel.offsets()(i);
    ss += (raw - truth_mean(g, i)).squaredNorm();
    n += sc.N;
  }
  EXPECT_NEAR(ss / static_cast<double>(n), 2.5, 0.05 * 2.5);
}

TEST(Synth, SameSeedIsBitIdentical) {
  SynthScenario sc;
  sc.missing_fraction = 0.05;
  const auto a = generate(sc);
  const auto b = generate(sc);
  EXPECT_TRUE(a.panel.values() == b.panel.values());
  EXPECT_TRUE((a.panel.observed() == b.panel.observed()).all());
  sc.seed += 1;
  EXPECT_FALSE(generate(sc).panel.values() == a.panel.values());
}

TEST(Synth, MissingFraction) {
  SynthScenario sc;
  sc.missing_fraction = 0.1;
  const auto g = generate(sc);
  const double frac = 1.0 - static_cast<double>(g.panel.observed_count()) / static_cast<double>(sc.M * sc.N);
  EXPECT_NEAR(frac, 0.1, 0.01);
}

TEST(Synth, SyntheticSpatialBasisIsOrthonormal) {
  const auto B = synthetic_spatial_basis(7, 3);
  EXPECT_TRUE((B.transpose() * B).isApprox(Eigen::MatrixXd::Identity(3, 3), 1e-12));
}

TEST(ScenarioJson, ErrorsNameTheField) {
  auto expect_field = [](const nlohmann::json& j, const std::string& field) {
    try {
      scenario_from_json(j);
      FAIL() << "accepted " << j.dump();
    } catch (const ValidationError& e) {
      EXPECT_NE(std::string(e.what()).find(field), std::string::npos) << e.what();
    }
  };
  expect_field({{"M", "four"}}, "M");
  expect_field({{"true_sigma2", {1, 2}}}, "true_sigma2");
  expect_field({{"true_config", {0, 1, 1}}}, "true_config");
  expect_field({{"true_tau", {std::vector<double>{}, {100.0}, {1200.0}, {600.0, 1400.0}}}}, "true_tau");
  EXPECT_THROW(scenario_from_json(nlohmann::json::array()), ValidationError);
}

TEST(ScenarioJson, RoundTrip) {
  auto sc = paper_scale_scenario();
  sc.missing_fraction = 0.02;
  const auto back = scenario_from_json(to_json(sc));
  EXPECT_EQ(to_json(back).dump(), to_json(sc).dump());
}

TEST(Synth, PosteriorIntervalsCoverTruth) {
  // Segment slopes only: centering moves the intercepts.
  int covered = 0, total = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SynthScenario sc;
    sc.seed = 500 + seed;
    const auto g = generate(sc);
    ModelSpec spec;
    spec.panel = std::make_shared<const TemperaturePanel>(g.panel);
    spec.bases = std::make_shared<const BasisSet>(g.bases);
    spec.config = sc.config;
    spec.priors.bound = sc.bound;
    spec.priors.gap = sc.gap;
    const auto s = run_chain(spec, Protocol{4000, 1000, 2, 1000 + seed});
    Eigen::Index off = 0;
    for (Eigen::Index i = 0; i < sc.M; ++i) {
      const auto u = static_cast<std::size_t>(i);
      for (std::size_t j = 1; j < sc.beta[u].size(); ++j) {
        std::vector<double> col(static_cast<std::size_t>(s.size()));
        for (Eigen::Index k = 0; k < s.size(); ++k) col[static_cast<std::size_t>(k)] = s.draws(k, off + static_cast<Eigen::Index>(j));
        std::sort(col.begin(), col.end());
        const double lo = col[static_cast<std::size_t>(0.025 * col.size())];
        const double hi = col[static_cast<std::size_t>(0.975 * col.size())];
        covered += (sc.beta[u][j] >= lo && sc.beta[u][j] <= hi) ? 1 : 0;
        ++total;
      }
      off += static_cast<Eigen::Index>(sc.beta[u].size());
    }
  }
  EXPECT_GE(static_cast<double>(covered) / total, 0.9) << covered << " of " << total;
}
