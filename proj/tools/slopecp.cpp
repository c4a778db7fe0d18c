// Command-line front end: synth, fit, select, diagnose.

#include <Eigen/Core>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "slopecp/basis.hpp"
#include "slopecp/diagnostics.hpp"
#include "slopecp/panel.hpp"
#include "slopecp/plot.hpp"
#include "slopecp/run_config.hpp"
#include "slopecp/sampler.hpp"
#include "slopecp/selection.hpp"
#include "slopecp/synth.hpp"
#include "slopecp/trace_io.hpp"

#ifndef SLOPECP_VERSION
#define SLOPECP_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace slopecp;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

struct Overrides {
  std::optional<std::string> profile;
  std::optional<std::string> config_file;
  std::optional<long> iterations, burn_in, thin;
  std::optional<std::uint64_t> seed;
  std::optional<double> b_bound, delta_gap, ess_floor, tau_sd_ceiling;
  std::optional<int> q_max, jobs, L, K;
  std::optional<std::string> strategy;
  std::optional<bool> stop_on_nonconvergence;
  std::optional<double> min_completeness;
  std::optional<long> realizations, day_stride;
};

void add_run_options(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config-file", o.config_file, "JSON run configuration");
  cmd->add_option("--profile", o.profile, "Default set: paper or desk");
  cmd->add_option("--iterations", o.iterations, "MCMC iterations");
  cmd->add_option("--burn-in", o.burn_in, "Iterations discarded");
  cmd->add_option("--thin", o.thin, "Keep every n-th iteration");
  cmd->add_option("--seed", o.seed, "Chain seed (master seed for select)");
  cmd->add_option("--b-bound", o.b_bound, "Days excluded at both ends for change points");
  cmd->add_option("--delta-gap", o.delta_gap, "Minimum days between change points");
  cmd->add_option("--ess-floor", o.ess_floor, "Minimum ESS as a fraction of saved draws");
  cmd->add_option("--tau-sd-ceiling", o.tau_sd_ceiling, "Change-point posterior SD ceiling (days)");
  cmd->add_option("--q-max", o.q_max, "Maximum change points per location");
  cmd->add_option("--L", o.L, "Fix the number of Fourier bases");
  cmd->add_option("--K", o.K, "Fix the number of EOFs");
  cmd->add_option("--min-completeness", o.min_completeness, "Observed fraction required per location");
  cmd->add_option("--realizations", o.realizations, "Mean-process draws written per fit");
  cmd->add_option("--day-stride", o.day_stride, "Day stride of mean-process output");
}

/// Profile, then config file, then flags.
RunConfig resolve(const Overrides& o) {
  json file = json::object();
  if (o.config_file) {
    std::ifstream in(*o.config_file);
    if (!in) throw ValidationError("cannot open config file '" + *o.config_file + "'");
    try {
      file = json::parse(in);
    } catch (const json::exception& e) {
      throw ValidationError("config file '" + *o.config_file + "': " + e.what());
    }
  }
  std::string profile = "paper";
  if (file.is_object() && file.contains("profile")) {
    if (!file["profile"].is_string()) throw ValidationError("run config key 'profile' must be a string");
    profile = file["profile"].get<std::string>();
  }
  if (o.profile) profile = *o.profile;
  RunConfig c = apply_json(RunConfig::profile(profile), file);
  if (o.iterations) c.protocol.iterations = *o.iterations;
  if (o.burn_in) c.protocol.burn_in = *o.burn_in;
  if (o.thin) c.protocol.thin = *o.thin;
  if (o.seed) c.protocol.seed = *o.seed;
  if (o.b_bound) c.priors.bound = *o.b_bound;
  if (o.delta_gap) c.priors.gap = *o.delta_gap;
  if (o.ess_floor) c.thresholds.ess_floor = *o.ess_floor;
  if (o.tau_sd_ceiling) c.thresholds.tau_sd_ceiling = *o.tau_sd_ceiling;
  if (o.q_max) c.q_max = *o.q_max;
  if (o.jobs) c.jobs = *o.jobs;
  if (o.L) c.basis.fixed_L = *o.L;
  if (o.K) c.basis.fixed_K = *o.K;
  if (o.strategy) c.strategy = parse_strategy(*o.strategy);
  if (o.stop_on_nonconvergence) c.continue_on_nonconvergence = !*o.stop_on_nonconvergence;
  if (o.min_completeness) c.schema.min_completeness = *o.min_completeness;
  if (o.realizations) c.realizations = *o.realizations;
  if (o.day_stride) c.day_stride = *o.day_stride;
  c.validate();
  return c;
}

void write_json(const fs::path& path, const json& j) {
  auto out = csv::open_out(path.string());
  out << j.dump(2) << '\n';
}

void write_run_metadata(const fs::path& dir, const std::string& command, const std::vector<std::string>& argv,
                        const json& config, const json& extra = json::object()) {
  json j{{"command", command},
         {"argv", argv},
         {"version", SLOPECP_VERSION},
         {"eigen_version", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                               std::to_string(EIGEN_MINOR_VERSION)},
         {"config", config}};
  for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
  write_json(dir / "run.json", j);
}

struct LoadedModel {
  std::shared_ptr<const TemperaturePanel> panel;
  std::shared_ptr<const BasisSet> bases;
};

LoadedModel load_model(const std::vector<std::string>& panel_paths, const std::optional<std::string>& bases_dir,
                       const RunConfig& c) {
  LoadedModel m;
  m.panel = std::make_shared<const TemperaturePanel>(ingest_csv(panel_paths, c.schema));
  if (bases_dir) {
    auto bs = load_bases(*bases_dir);
    detail::require(bs.temporal.H.rows() == m.panel->days(), "bases in '" + *bases_dir + "' have " +
                                                                 std::to_string(bs.temporal.H.rows()) +
                                                                 " days, panel has " +
                                                                 std::to_string(m.panel->days()));
    detail::require(bs.spatial.B.rows() == m.panel->locations(), "bases in '" + *bases_dir +
                                                                     "' do not match the panel's locations");
    m.bases = std::make_shared<const BasisSet>(std::move(bs));
  } else {
    m.bases = std::make_shared<const BasisSet>(build_bases(*m.panel, c.basis));
  }
  return m;
}

json model_extra(const LoadedModel& m, const std::vector<std::string>& panel_paths, const fs::path& bases_dir,
                 const RunConfig& c) {
  return {{"run_config", to_json(c)},
          {"panel", panel_paths},
          {"bases", fs::absolute(bases_dir).string()},
          {"location_ids", m.panel->location_ids()},
          {"first_date", format_iso_date(m.panel->first_day())},
          {"K", m.bases->K()},
          {"L", m.bases->L()}};
}

std::vector<std::string> absolute_paths(const std::vector<std::string>& paths) {
  std::vector<std::string> out;
  for (const auto& p : paths) out.push_back(fs::absolute(p).string());
  return out;
}

/// Writes trace, log-likelihood, report and mean-process draws of one fit.
FitReport write_fit_artifacts(const PosteriorSamples& s, const ModelSpec& spec, const RunConfig& c,
                              const fs::path& dir, const json& extra) {
  io::write_trace(s, dir, spec.N(), extra);
  auto report = make_report(s, spec, c.thresholds);
  write_json(dir / "report.json", to_json(report));
  io::write_mean_realizations(s, dir / "mu.csv", spec.panel->location_ids(), spec.N(), c.realizations, c.day_stride);
  return report;
}

int cmd_synth(const std::optional<std::string>& scenario_path, bool paper_scale, const fs::path& out,
              const std::vector<std::string>& argv) {
  SynthScenario sc = paper_scale ? paper_scale_scenario() : SynthScenario{};
  if (scenario_path) {
    std::ifstream in(*scenario_path);
    if (!in) throw ValidationError("cannot open scenario '" + *scenario_path + "'");
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw ValidationError("scenario '" + *scenario_path + "': " + e.what());
    }
    sc = scenario_from_json(j, sc);
  }
  const auto g = generate(sc);
  fs::create_directories(out);
  export_canonical(g.panel, (out / "panel.csv").string());
  export_bases(g.bases, (out / "generating_bases").string());
  write_json(out / "truth.json", to_json(sc));
  write_run_metadata(out, "synth", argv, to_json(sc));
  std::cout << "wrote " << (out / "panel.csv").string() << " (" << g.panel.locations() << " locations x "
            << g.panel.days() << " days)\n";
  return 0;
}

int cmd_fit(const std::vector<std::string>& panel_paths, const std::optional<std::string>& bases_dir,
            const std::string& config_text, const RunConfig& c, const fs::path& out,
            const std::vector<std::string>& argv) {
  const auto model = load_model(panel_paths, bases_dir, c);
  fs::create_directories(out);
  export_bases(*model.bases, (out / "bases").string());
  const auto abs_panels = absolute_paths(panel_paths);
  auto extra = model_extra(model, abs_panels, out / "bases", c);
  write_run_metadata(out, "fit", argv, to_json(c), {{"model_config", config_text}});
  ModelSpec spec = make_spec(model.panel, model.bases, ChangePointConfig::parse(config_text), c.selection());
  spec.validate();
  try {
    const auto s = run_chain(spec, c.protocol);
    const auto report = write_fit_artifacts(s, spec, c, out, extra);
    std::cout << "config " << spec.config.str() << ": DIC " << report.dic << ", p_D " << report.p_d << ", min ESS "
              << report.min_ess << ", max change-point SD " << report.max_tau_sd << ", "
              << (report.converged ? "converged" : "not converged") << '\n';
  } catch (const ChainAborted& e) {
    io::write_trace(e.partial(), out, spec.N(), extra);
    std::cerr << "chain aborted; partial trace of " << e.partial().size() << " draws written to " << out.string()
              << '\n';
    throw;
  }
  return 0;
}

int cmd_select(const std::vector<std::string>& panel_paths, const std::optional<std::string>& bases_dir,
               const RunConfig& c, const fs::path& out, const std::vector<std::string>& argv) {
  const auto model = load_model(panel_paths, bases_dir, c);
  fs::create_directories(out);
  export_bases(*model.bases, (out / "bases").string());
  write_run_metadata(out, "select", argv, to_json(c), {{"K", model.bases->K()}, {"L", model.bases->L()}});
  const auto opt = c.selection();
  const auto trace = run_forward_selection(model.panel, model.bases, opt);
  auto tj = to_json(trace);
  tj["location_ids"] = model.panel->location_ids();
  write_json(out / "selection.json", tj);
  const auto table = step_table(trace, model.panel->location_ids());
  {
    auto f = csv::open_out((out / "steps.txt").string());
    f << table;
  }
  std::cout << table;
  if (!trace.final_fit) return 0;

  // Refit the chosen model with its recorded seed; the chain is deterministic,
  // so these artifacts are exactly the draws the selection scored.
  const auto& best = trace.fits[*trace.final_fit];
  const auto spec = make_spec(model.panel, model.bases, best.config, opt);
  auto protocol = c.protocol;
  protocol.seed = best.seed;
  const auto s = run_chain(spec, protocol);
  auto final_cfg = c;
  final_cfg.protocol.seed = best.seed;
  write_fit_artifacts(s, spec, final_cfg, out / "final",
                      model_extra(model, absolute_paths(panel_paths), out / "bases", final_cfg));
  return 0;
}

std::vector<double> read_column(const std::string& path) {
  auto in = csv::open_in(path);
  std::vector<double> v;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    const auto t = csv::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto f = csv::split_line(t);
    double d = 0.0;
    if (!csv::parse_double(f.back(), d)) {
      if (first) {
        first = false;
        continue;  // header
      }
      throw ValidationError("'" + path + "': non-numeric value '" + f.back() + "'");
    }
    first = false;
    v.push_back(d);
  }
  return v;
}

int cmd_diagnose(const std::optional<std::string>& trace_path, const std::vector<std::string>& overlap,
                 const std::optional<std::string>& out_dir, const Overrides& o) {
  if (!overlap.empty()) {
    const auto a = read_column(overlap[0]);
    const auto b = read_column(overlap[1]);
    detail::require(a.size() >= 2 && b.size() >= 2, "overlap needs at least 2 values in each file");
    std::cout << "overlap index: " << csv::format_double(overlap_index(a, b)) << '\n';
    if (!trace_path) return 0;
  }
  detail::require(trace_path.has_value(), "diagnose needs --trace or --overlap");
  const auto tf = io::read_trace(*trace_path);
  const auto& s = tf.samples;
  const fs::path out = out_dir ? fs::path(*out_dir)
                               : (fs::is_directory(*trace_path) ? fs::path(*trace_path)
                                                                : fs::path(*trace_path).parent_path()) /
                                     "diagnostics";
  fs::create_directories(out);

  RunConfig c;
  if (tf.meta.contains("run_config")) c = apply_json(c, tf.meta["run_config"]);
  Thresholds th = c.thresholds;
  if (o.ess_floor) th.ess_floor = *o.ess_floor;
  if (o.tau_sd_ceiling) th.tau_sd_ceiling = *o.tau_sd_ceiling;

  FitReport report = summarize(s, th);
  // DIC needs the panel and bases the chain was run on.
  if (tf.meta.contains("panel") && tf.meta.contains("bases") && s.loglik.size() > 0) {
    try {
      const auto panels = tf.meta["panel"].get<std::vector<std::string>>();
      const auto model = load_model(panels, tf.meta["bases"].get<std::string>(), c);
      ModelSpec spec = make_spec(model.panel, model.bases, s.config, c.selection());
      report = make_report(s, spec, th);
    } catch (const std::exception& e) {
      std::cerr << "DIC skipped: " << e.what() << '\n';
    }
  }
  write_json(out / "report.json", to_json(report));

  {
    auto f = csv::open_out((out / "ess.csv").string());
    f << "parameter,ess,geweke\n";
    for (std::size_t k = 0; k < report.names.size(); ++k)
      f << report.names[k] << ',' << csv::format_double(report.ess[k]) << ','
        << (report.geweke.empty() ? std::string("NA") : csv::format_double(report.geweke[k])) << '\n';
  }
  std::cout << "parameter                 ESS      Geweke\n";
  for (std::size_t k = 0; k < report.names.size(); ++k) {
    std::cout << std::left << std::setw(20) << report.names[k] << std::right << std::setw(10) << std::fixed
              << std::setprecision(1) << report.ess[k];
    if (!report.geweke.empty()) std::cout << std::setw(12) << std::setprecision(3) << report.geweke[k];
    std::cout << '\n';
  }
  std::cout << (report.converged ? "converged" : "not converged");
  for (const auto& f : report.failing) std::cout << "; " << f;
  std::cout << '\n';

  for (Eigen::Index j = 0; j < s.n_tau; ++j) {
    const auto col = s.tau_offset() + j;
    std::vector<double> v(s.draws.col(col).data(), s.draws.col(col).data() + s.size());
    const auto& name = s.names[static_cast<std::size_t>(col)];
    plot::histogram(v, 40, "Posterior of " + name, "day").save((out / ("hist_" + name + ".svg")).string());
  }
  std::vector<std::string> ids;
  if (tf.meta.contains("location_ids")) ids = tf.meta["location_ids"].get<std::vector<std::string>>();
  for (std::size_t i = ids.size(); i < s.config.locations(); ++i) ids.push_back("loc" + std::to_string(i + 1));
  const Eigen::VectorXd ts = scaled_time(static_cast<std::size_t>(tf.n_days));
  std::vector<double> days(static_cast<std::size_t>(tf.n_days));
  for (std::size_t t = 0; t < days.size(); ++t) days[t] = static_cast<double>(t + 1);
  for (std::size_t i = 0; i < s.config.locations(); ++i) {
    std::vector<std::vector<double>> curves;
    for (const auto d : io::realization_draws(s.size(), 50)) {
      const Eigen::VectorXd mu = io::mean_realization(s, d, i, ts);
      curves.emplace_back(mu.data(), mu.data() + mu.size());
    }
    plot::spaghetti(days, curves, "Mean process draws, " + ids[i], "day", "centered temperature")
        .save((out / ("mu_" + ids[i] + ".svg")).string());
  }
  std::cout << "wrote " << out.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian slope change-point selection for temperature panels"};
  app.require_subcommand(1);
  app.set_version_flag("--version", SLOPECP_VERSION);
  const std::vector<std::string> args(argv, argv + argc);

  auto* synth = app.add_subcommand("synth", "Generate a synthetic panel");
  std::optional<std::string> scenario;
  bool paper_scale = false;
  std::string synth_out = "synth";
  synth->add_option("--scenario", scenario, "Scenario JSON");
  synth->add_flag("--paper-scale", paper_scale, "Start from the 22,000-day, 8-location layout");
  synth->add_option("--out", synth_out, "Output directory");

  Overrides fit_o, sel_o, diag_o;
  auto* fit = app.add_subcommand("fit", "Fit one change-point configuration");
  std::vector<std::string> fit_panel;
  std::optional<std::string> fit_bases;
  std::string fit_config;
  std::string fit_out = "fit";
  fit->add_option("--panel", fit_panel, "Panel CSV file(s)")->required();
  fit->add_option("--bases", fit_bases, "Directory with H.csv and B.csv (default: derive from the panel)");
  fit->add_option("--config", fit_config, "Change points per location, e.g. 0,1,1,2")->required();
  fit->add_option("--out", fit_out, "Output directory");
  add_run_options(fit, fit_o);

  auto* sel = app.add_subcommand("select", "Forward change-point selection");
  std::vector<std::string> sel_panel;
  std::optional<std::string> sel_bases;
  std::string sel_out = "select";
  sel->add_option("--panel", sel_panel, "Panel CSV file(s)")->required();
  sel->add_option("--bases", sel_bases, "Directory with H.csv and B.csv (default: derive from the panel)");
  sel->add_option("--out", sel_out, "Output directory");
  sel->add_option("--strategy", sel_o.strategy, "forward, backward or stepwise");
  sel->add_option("--jobs", sel_o.jobs, "Candidate fits run in parallel");
  sel->add_flag("--stop-on-nonconvergence{true}", sel_o.stop_on_nonconvergence,
                "Stop when no candidate converges (=false continues with the minimum DIC)");
  add_run_options(sel, sel_o);

  auto* diag = app.add_subcommand("diagnose", "Diagnostics and plots for a saved trace");
  std::optional<std::string> diag_trace, diag_out;
  std::vector<std::string> diag_overlap;
  diag->add_option("--trace", diag_trace, "Run directory or trace.csv");
  diag->add_option("--overlap", diag_overlap, "Two single-column CSV files")->expected(2);
  diag->add_option("--out", diag_out, "Output directory (default: <run>/diagnostics)");
  diag->add_option("--ess-floor", diag_o.ess_floor, "Minimum ESS as a fraction of saved draws");
  diag->add_option("--tau-sd-ceiling", diag_o.tau_sd_ceiling, "Change-point posterior SD ceiling (days)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*synth) return cmd_synth(scenario, paper_scale, synth_out, args);
    if (*fit) return cmd_fit(fit_panel, fit_bases, fit_config, resolve(fit_o), fit_out, args);
    if (*sel) return cmd_select(sel_panel, sel_bases, resolve(sel_o), sel_out, args);
    if (*diag) return cmd_diagnose(diag_trace, diag_overlap, diag_out, diag_o);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
