#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "slopecp/plot.hpp"
#include "slopecp/run_config.hpp"
#include "slopecp/synth.hpp"
#include "slopecp/trace_io.hpp"

using namespace slopecp;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  auto d = fs::temp_directory_path() / ("slopecp_io_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

PosteriorSamples short_run(ModelSpec* keep = nullptr) {
  SynthScenario sc;
  sc.N = 600;
  sc.tau = {{}, {300.0}, {250.0}, {150.0, 400.0}};
  sc.bound = 50;
  sc.gap = 50;
  const auto g = generate(sc);
  ModelSpec spec;
  spec.panel = std::make_shared<const TemperaturePanel>(g.panel);
  spec.bases = std::make_shared<const BasisSet>(g.bases);
  spec.config = sc.config;
  spec.priors.bound = sc.bound;
  spec.priors.gap = sc.gap;
  if (keep) *keep = spec;
  return run_chain(spec, Protocol{500, 100, 4, 3});
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST(Trace, RoundTripIsExact) {
  const auto dir = scratch_dir("roundtrip");
  const auto s = short_run();
  io::write_trace(s, dir, 600, {{"note", "x"}});
  const auto t = io::read_trace(dir);
  EXPECT_EQ(t.n_days, 600);
  EXPECT_EQ(t.meta["note"], "x");
  EXPECT_EQ(t.samples.names, s.names);
  EXPECT_EQ(t.samples.config.q, s.config.q);
  EXPECT_EQ(t.samples.knot_location, s.knot_location);
  EXPECT_TRUE(t.samples.draws == s.draws);
  EXPECT_TRUE(t.samples.loglik == s.loglik);
  EXPECT_EQ(t.samples.loglik_trace, s.loglik_trace);
  EXPECT_EQ(t.samples.acceptance, s.acceptance);
  EXPECT_EQ(io::read_trace(dir / "trace.csv").samples.size(), s.size());
}

TEST(Trace, DetectsTruncation) {
  const auto dir = scratch_dir("trunc");
  const auto s = short_run();
  io::write_trace(s, dir, 600);
  const auto text = slurp(dir / "trace.csv");

  // cut mid-row
  std::ofstream(dir / "trace.csv", std::ios::binary) << text.substr(0, text.size() - 7);
  EXPECT_THROW(io::read_trace(dir), ValidationError);

  // drop whole rows
  auto cut = text.substr(0, text.size() - 1);
  cut = cut.substr(0, cut.rfind('\n') + 1);
  std::ofstream(dir / "trace.csv", std::ios::binary) << cut;
  try {
    io::read_trace(dir);
    FAIL() << "short trace accepted";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("truncated"), std::string::npos);
  }

  // intact trace, short log-likelihood file
  std::ofstream(dir / "trace.csv", std::ios::binary) << text;
  EXPECT_NO_THROW(io::read_trace(dir));
  const auto ll = slurp(dir / "loglik.csv");
  const auto half = ll.substr(0, ll.size() / 2);
  std::ofstream(dir / "loglik.csv", std::ios::binary) << half.substr(0, half.rfind('\n') + 1);
  EXPECT_THROW(io::read_trace(dir), ValidationError);
  EXPECT_THROW(io::read_trace(dir / "nope"), ValidationError);
}

TEST(Trace, PartialTraceIsReadable) {
  const auto dir = scratch_dir("partial");
  auto s = short_run();
  s.draws.conservativeResize(20, s.draws.cols());
  s.loglik.conservativeResize(20);
  s.loglik_trace.resize(100 + 20 * 4);
  s.complete = false;
  io::write_trace(s, dir, 600);
  const auto t = io::read_trace(dir);
  EXPECT_EQ(t.samples.size(), 20);
  EXPECT_FALSE(t.samples.complete);
}

TEST(Realizations, MatchMeanModel) {
  ModelSpec spec;
  const auto s = short_run(&spec);
  const auto ts = spec.panel->t_star();
  const auto mu = io::mean_realization(s, 5, 3, ts);
  const Eigen::VectorXd b = s.beta(5).tail(4);
  EXPECT_TRUE(mu.isApprox(build_design(2, s.tau(5)[3], ts) * b));
  EXPECT_EQ(io::realization_draws(100, 4), (std::vector<Eigen::Index>{0, 25, 50, 75}));
  EXPECT_EQ(io::realization_draws(3, 10).size(), 3u);

  const auto dir = scratch_dir("mu");
  io::write_mean_realizations(s, dir / "mu.csv", spec.panel->location_ids(), 600, 5, 10);
  const auto text = slurp(dir / "mu.csv");
  EXPECT_EQ(static_cast<long>(std::count(text.begin(), text.end(), '\n')), 1 + 5 * 4 * 60);
}

TEST(RunConfig, ProfilesAndOverlay) {
  const auto paper = RunConfig::profile("paper");
  EXPECT_EQ(paper.protocol.iterations, 122000);
  EXPECT_EQ(paper.protocol.saved(), 24000);
  EXPECT_EQ(paper.thresholds.tau_sd_ceiling, 2500.0);
  EXPECT_EQ(paper.priors.bound, 2000.0);
  const auto desk = RunConfig::profile("desk");
  EXPECT_EQ(desk.protocol.saved(), 2000);
  EXPECT_THROW(RunConfig::profile("fast"), ValidationError);

  const auto c = apply_json(desk, {{"thin", 10}, {"strategy", "stepwise"}, {"L", 6}, {"profile", "desk"}});
  EXPECT_EQ(c.protocol.thin, 10);
  EXPECT_EQ(c.protocol.iterations, 12000);
  EXPECT_EQ(c.strategy, Strategy::stepwise);
  EXPECT_EQ(c.basis.fixed_L, 6);
  EXPECT_EQ(c.selection().master_seed, c.protocol.seed);

  const auto back = apply_json(RunConfig{}, to_json(c));
  EXPECT_EQ(to_json(back).dump(), to_json(c).dump());
}

TEST(RunConfig, ErrorsNameTheKey) {
  auto expect_key = [](const nlohmann::json& j, const std::string& key) {
    try {
      apply_json(RunConfig{}, j);
      FAIL() << "accepted " << j.dump();
    } catch (const ValidationError& e) {
      EXPECT_NE(std::string(e.what()).find(key), std::string::npos) << e.what();
    }
  };
  expect_key({{"itrations", 5}}, "itrations");
  expect_key({{"thin", "five"}}, "thin");
  expect_key({{"strategy", "sideways"}}, "sideways");
  RunConfig bad;
  bad.protocol.burn_in = bad.protocol.iterations;
  EXPECT_THROW(bad.validate(), ValidationError);
}

TEST(Plot, SvgIsWellFormed) {
  const auto dir = scratch_dir("plot");
  auto h = plot::histogram({1, 2, 2, 3, 3, 3, 4}, 4, "tau <1> & co", "day");
  h.save((dir / "h.svg").string());
  const auto text = slurp(dir / "h.svg");
  EXPECT_TRUE(text.rfind("<svg", 0) == 0 || text.rfind("<?xml", 0) == 0);
  EXPECT_NE(text.find("</svg>"), std::string::npos);
  EXPECT_NE(text.find("&lt;1&gt; &amp; co"), std::string::npos);
  EXPECT_EQ(text.find("<1>"), std::string::npos);
  const auto rects = [&] {
    long n = 0;
    for (std::size_t p = text.find("<rect"); p != std::string::npos; p = text.find("<rect", p + 1)) ++n;
    return n;
  }();
  EXPECT_GE(rects, 4);

  const auto sp = plot::spaghetti({1, 2, 3}, {{0, 1, 0}, {1, 0, 1}}, "mu", "day", "value").svg();
  long lines = 0;
  for (std::size_t p = sp.find("<polyline"); p != std::string::npos; p = sp.find("<polyline", p + 1)) ++lines;
  EXPECT_EQ(lines, 2);
  EXPECT_NO_THROW(plot::histogram({5, 5, 5}, 10, "flat", "x").svg());
}
