#ifndef SLOPECP_SYNTH_HPP
#define SLOPECP_SYNTH_HPP

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "slopecp/basis.hpp"
#include "slopecp/error.hpp"
#include "slopecp/mean_model.hpp"
#include "slopecp/panel.hpp"

namespace slopecp {

/// Generative truth for a synthetic panel. The default values are artifact
/// choices picked to give visually distinct segments.
struct SynthScenario {
  Eigen::Index M = 4;
  Eigen::Index N = 2000;
  ChangePointConfig config{{0, 1, 1, 2}};
  std::vector<std::vector<double>> beta{{0.0, 0.5}, {0.0, 0.5, 3.0}, {0.0, -1.0, 2.0}, {0.0, 0.5, 3.0, -1.0}};
  std::vector<std::vector<double>> tau{{}, {800.0}, {1200.0}, {600.0, 1400.0}};
  std::vector<double> alpha{16.0, 4.0, 2.0, 1.0};
  double sigma2 = 1.0;
  int K = 1;
  int L = 4;
  double period = 365.25;
  /// "synthetic": constant + cosine EOF patterns; "panel": EOFs of `basis_panel`.
  std::string basis_source = "synthetic";
  std::string basis_panel;
  double bound = 200.0;
  double gap = 200.0;
  std::string start_date = "1956-10-08";
  /// Cells dropped uniformly at random.
  double missing_fraction = 0.0;
  std::uint64_t seed = 20240601;

  void validate() const {
    detail::require(M >= 1 && N >= 2, "scenario: M >= 1 and N >= 2 required");
    detail::require(K >= 1 && K <= M, "scenario: K must lie in [1, M]");
    detail::require(L >= 1, "scenario: L must be >= 1");
    detail::require(period > 0.0, "scenario: period must be positive");
    detail::require(sigma2 >= 0.0, "scenario: sigma2 must be nonnegative");
    detail::require(missing_fraction >= 0.0 && missing_fraction < 1.0, "scenario: missing_fraction must lie in [0, 1)");
    detail::require(config.locations() == static_cast<std::size_t>(M), "scenario: true_config needs M entries");
    detail::require(beta.size() == static_cast<std::size_t>(M), "scenario: true_beta needs M rows");
    detail::require(tau.size() == static_cast<std::size_t>(M), "scenario: true_tau needs M rows");
    detail::require(alpha.size() == static_cast<std::size_t>(K * L), "scenario: true_alpha needs K*L entries");
    detail::require(basis_source == "synthetic" || basis_source == "panel", "scenario: basis_source must be 'synthetic' or 'panel'");
    const KnotSupport sup{bound, gap, N};
    for (std::size_t i = 0; i < beta.size(); ++i) {
      const int q = config.q[i];
      detail::require(q >= 0, "scenario: negative change-point count");
      detail::require(beta[i].size() == static_cast<std::size_t>(q + 2),
                      "scenario: true_beta row " + std::to_string(i) + " needs q+2 entries");
      detail::require(tau[i].size() == static_cast<std::size_t>(q),
                      "scenario: true_tau row " + std::to_string(i) + " needs q entries");
      detail::require(sup.contains(tau[i]), "scenario: true_tau row " + std::to_string(i) + " outside the prior support");
    }
    detail::require(parse_iso_date(start_date).has_value(), "scenario: bad start_date '" + start_date + "'");
  }
};

/// Paper-sized layout: 22,000 days, eight locations, four temporal and one spatial basis.
inline SynthScenario paper_scale_scenario() {
  SynthScenario s;
  s.M = 8;
  s.N = 22000;
  s.config = ChangePointConfig({0, 1, 1, 1, 2, 0, 0, 0});
  s.beta = {{0.0, 0.8},      {0.0, 0.5, 2.0},  {0.0, 1.5, -0.5}, {0.0, -0.5, 1.5},
            {0.0, 1.9, 2.4, 1.3}, {0.0, 1.0}, {0.0, -0.4}, {0.0, 0.6}};
  s.tau = {{}, {9000.0}, {12000.0}, {15000.0}, {7000.0, 14600.0}, {}, {}, {}};
  s.alpha = {16.0, 4.0, 2.0, 1.0};
  s.sigma2 = 16.0;
  s.K = 1;
  s.L = 4;
  s.bound = 2000.0;
  s.gap = 2000.0;
  return s;
}

/// Orthonormal M x K patterns: a constant column followed by DCT-II cosines.
inline Eigen::MatrixXd synthetic_spatial_basis(Eigen::Index M, int K) {
  Eigen::MatrixXd B(M, K);
  for (int k = 0; k < K; ++k) {
    for (Eigen::Index i = 0; i < M; ++i)
      B(i, k) = std::cos(std::numbers::pi * k * (static_cast<double>(i) + 0.5) / static_cast<double>(M));
    B.col(k).normalize();
  }
  return B;
}

struct SynthResult {
  TemperaturePanel panel;
  BasisSet bases;
  SynthScenario scenario;
};

inline SynthResult generate(const SynthScenario& sc) {
  sc.validate();
  SynthResult out;
  out.scenario = sc;
  out.bases.temporal = build_fourier(sc.N, sc.L, sc.period);
  if (sc.basis_source == "panel") {
    const auto src = ingest_csv(sc.basis_panel);
    detail::require(src.locations() == sc.M, "scenario: basis panel has a different number of locations");
    detail::require(src.days() == sc.N, "scenario: basis panel has a different number of days");
    out.bases.spatial = build_eof(residuals_for_eof(src, out.bases.temporal), sc.K);
  } else {
    out.bases.spatial.B = synthetic_spatial_basis(sc.M, sc.K);
    out.bases.spatial.K = sc.K;
  }

  std::mt19937_64 rng(sc.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const Eigen::VectorXd ts = scaled_time(static_cast<std::size_t>(sc.N));
  const Eigen::Map<const Eigen::VectorXd> alpha(sc.alpha.data(), static_cast<Eigen::Index>(sc.alpha.size()));
  const auto& H = out.bases.temporal.H;
  const auto& B = out.bases.spatial.B;

  Eigen::MatrixXd Y(sc.M, sc.N);
  Mask observed = Mask::Constant(sc.M, sc.N, true);
  const double sd = std::sqrt(sc.sigma2);
  for (Eigen::Index i = 0; i < sc.M; ++i) {
    const auto u = static_cast<std::size_t>(i);
    const Eigen::MatrixXd X = build_design(sc.config.q[u], sc.tau[u], ts);
    const Eigen::Map<const Eigen::VectorXd> b(sc.beta[u].data(), static_cast<Eigen::Index>(sc.beta[u].size()));
    Eigen::VectorXd c = Eigen::VectorXd::Zero(sc.L);
    for (int k = 0; k < sc.K; ++k) c += B(i, k) * alpha.segment(k * sc.L, sc.L);
    const Eigen::VectorXd mean = X * b + H * c;
    for (Eigen::Index t = 0; t < sc.N; ++t) Y(i, t) = mean(t) + sd * normal(rng);
  }
  if (sc.missing_fraction > 0.0)
    for (Eigen::Index i = 0; i < sc.M; ++i)
      for (Eigen::Index t = 0; t < sc.N; ++t) observed(i, t) = unif(rng) >= sc.missing_fraction;

  std::vector<std::string> ids;
  for (Eigen::Index i = 0; i < sc.M; ++i) ids.push_back("loc" + std::to_string(i + 1));
  out.panel = TemperaturePanel(std::move(Y), std::move(observed), *parse_iso_date(sc.start_date), std::move(ids), 0.0);
  return out;
}

inline nlohmann::json to_json(const SynthScenario& s) {
  return {{"M", s.M},
          {"N", s.N},
          {"true_config", s.config.q},
          {"true_beta", s.beta},
          {"true_tau", s.tau},
          {"true_alpha", s.alpha},
          {"true_sigma2", s.sigma2},
          {"K", s.K},
          {"L", s.L},
          {"period", s.period},
          {"basis_source", s.basis_source},
          {"basis_panel", s.basis_panel},
          {"bound", s.bound},
          {"gap", s.gap},
          {"start_date", s.start_date},
          {"missing_fraction", s.missing_fraction},
          {"seed", s.seed}};
}

/// Fields absent from `j` keep their defaults; present fields of the wrong type
/// raise a ValidationError naming the field.
inline SynthScenario scenario_from_json(const nlohmann::json& j, SynthScenario s = {}) {
  detail::require(j.is_object(), "scenario must be a JSON object");
  auto field = [&j](const char* name, auto& target) {
    if (!j.contains(name)) return;
    try {
      using T = std::decay_t<decltype(target)>;
      target = j.at(name).get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("scenario field '") + name + "': " + e.what());
    }
  };
  field("M", s.M);
  field("N", s.N);
  field("true_config", s.config.q);
  field("true_beta", s.beta);
  field("true_tau", s.tau);
  field("true_alpha", s.alpha);
  field("true_sigma2", s.sigma2);
  field("K", s.K);
  field("L", s.L);
  field("period", s.period);
  field("basis_source", s.basis_source);
  field("basis_panel", s.basis_panel);
  field("bound", s.bound);
  field("gap", s.gap);
  field("start_date", s.start_date);
  field("missing_fraction", s.missing_fraction);
  field("seed", s.seed);
  s.validate();
  return s;
}

}  // namespace slopecp

#endif
