#ifndef SLOPECP_SELECTION_HPP
#define SLOPECP_SELECTION_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "slopecp/diagnostics.hpp"
#include "slopecp/sampler.hpp"

namespace slopecp {

enum class Strategy { forward, backward, stepwise };

inline std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::forward: return "forward";
    case Strategy::backward: return "backward";
    case Strategy::stepwise: return "stepwise";
  }
  return "forward";
}

inline Strategy parse_strategy(const std::string& s) {
  if (s == "forward") return Strategy::forward;
  if (s == "backward") return Strategy::backward;
  if (s == "stepwise") return Strategy::stepwise;
  throw ValidationError("unknown selection strategy '" + s + "' (forward, backward, stepwise)");
}

struct SelectionOptions {
  int q_max = 2;
  Strategy strategy = Strategy::forward;
  /// Keep going with the minimum-DIC candidate when none passes the gate.
  bool continue_on_nonconvergence = false;
  int jobs = 1;
  std::uint64_t master_seed = 1;
  Protocol protocol;  // seed is replaced per candidate
  Priors priors;
  ScamOptions scam;
  Thresholds thresholds;
  double max_condition = 1e10;
};

struct FitRecord {
  int step = 0;
  int index = 0;
  ChangePointConfig config;
  std::uint64_t seed = 0;
  bool aborted = false;
  std::string error;
  FitReport report;

  bool converged() const { return !aborted && report.converged; }
  double dic() const { return aborted ? std::numeric_limits<double>::infinity() : report.dic; }
};

struct SelectionStep {
  int step = 0;
  std::vector<std::size_t> fits;  // indices into SelectionTrace::fits
  std::optional<ChangePointConfig> chosen;
  std::optional<std::size_t> chosen_fit;
  std::string stop_reason;  // empty while the search continues
};

struct SelectionTrace {
  Strategy strategy = Strategy::forward;
  std::uint64_t master_seed = 0;
  std::vector<FitRecord> fits;
  std::vector<SelectionStep> steps;
  std::optional<std::size_t> final_fit;

  std::optional<ChangePointConfig> final_config() const {
    if (!final_fit) return std::nullopt;
    return fits[*final_fit].config;
  }
};

/// Deterministic per-candidate seed (splitmix64 over master, step, index).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t step, std::uint64_t index) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(master) ^ step) ^ (index * 0x2545f4914f6cdd1dULL));
}

/// Configs one increment away from `current`, skipping locations already at q_max.
inline std::vector<ChangePointConfig> enumerate_step(const ChangePointConfig& current, int q_max) {
  std::vector<ChangePointConfig> out;
  for (std::size_t i = 0; i < current.q.size(); ++i) {
    if (current.q[i] >= q_max) continue;
    auto c = current;
    ++c.q[i];
    out.push_back(std::move(c));
  }
  return out;
}

/// Configs one decrement away from `current`.
inline std::vector<ChangePointConfig> enumerate_decrements(const ChangePointConfig& current) {
  std::vector<ChangePointConfig> out;
  for (std::size_t i = 0; i < current.q.size(); ++i) {
    if (current.q[i] == 0) continue;
    auto c = current;
    --c.q[i];
    out.push_back(std::move(c));
  }
  return out;
}

inline ModelSpec make_spec(std::shared_ptr<const TemperaturePanel> panel, std::shared_ptr<const BasisSet> bases,
                           const ChangePointConfig& config, const SelectionOptions& opt) {
  ModelSpec spec;
  spec.panel = std::move(panel);
  spec.bases = std::move(bases);
  spec.config = config;
  spec.priors = opt.priors;
  spec.scam = opt.scam;
  spec.q_max = opt.q_max;
  spec.max_condition = opt.max_condition;
  return spec;
}

/// Fits one candidate. Numerical aborts are recorded, not rethrown.
inline FitRecord fit_candidate(const std::shared_ptr<const TemperaturePanel>& panel,
                               const std::shared_ptr<const BasisSet>& bases, const ChangePointConfig& config,
                               const SelectionOptions& opt, std::uint64_t seed) {
  FitRecord rec;
  rec.config = config;
  rec.seed = seed;
  try {
    const auto spec = make_spec(panel, bases, config, opt);
    auto protocol = opt.protocol;
    protocol.seed = seed;
    const auto samples = run_chain(spec, protocol);
    rec.report = make_report(samples, spec, opt.thresholds);
  } catch (const NumericalError& e) {
    rec.aborted = true;
    rec.error = e.what();
  }
  return rec;
}

/// Runs `work(k)` for k in [0, count) on up to `jobs` threads.
template <class Work>
void parallel_for(std::size_t count, int jobs, Work&& work) {
  const auto nthreads = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, jobs)));
  if (nthreads <= 1) {
    for (std::size_t k = 0; k < count; ++k) work(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < nthreads; ++t)
    pool.emplace_back([&] {
      for (std::size_t k = next++; k < count; k = next++) {
        try {
          work(k);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

namespace detail {

/// Index of the first location where two configs differ.
inline std::size_t changed_location(const ChangePointConfig& a, const ChangePointConfig& b) {
  for (std::size_t i = 0; i < a.q.size() && i < b.q.size(); ++i)
    if (a.q[i] != b.q[i]) return i;
  return a.q.size();
}

/// Minimum DIC; ties within 1e-9 go to fewer change points, then the lower
/// changed location, then the earlier fit.
inline std::optional<std::size_t> pick_min_dic(const std::vector<FitRecord>& fits, const std::vector<std::size_t>& pool,
                                               const ChangePointConfig& reference) {
  std::optional<std::size_t> best;
  for (std::size_t k : pool) {
    if (!best) {
      best = k;
      continue;
    }
    const auto& a = fits[k];
    const auto& b = fits[*best];
    const double da = a.dic(), db = b.dic();
    if (da < db - 1e-9) {
      best = k;
    } else if (std::abs(da - db) <= 1e-9) {
      const int ta = a.config.total(), tb = b.config.total();
      const auto la = changed_location(a.config, reference), lb = changed_location(b.config, reference);
      if (ta < tb || (ta == tb && la < lb)) best = k;
    }
  }
  return best;
}

}  // namespace detail

/// Greedy change-point search. Each step fits every neighbour of the current
/// config in parallel, gates them on ESS and knot SD, and moves to the
/// minimum-DIC converged candidate. The final model is the minimum-DIC
/// converged fit over the whole trace.
inline SelectionTrace run_forward_selection(std::shared_ptr<const TemperaturePanel> panel,
                                    std::shared_ptr<const BasisSet> bases, const SelectionOptions& opt) {
  detail::require(panel && bases, "selection needs a panel and bases");
  detail::require(opt.q_max >= 1, "q_max must be at least 1");
  opt.protocol.validate();
  SelectionTrace trace;
  trace.strategy = opt.strategy;
  trace.master_seed = opt.master_seed;
  const auto M = static_cast<std::size_t>(panel->locations());

  ChangePointConfig current = opt.strategy == Strategy::backward
                                  ? ChangePointConfig(std::vector<int>(M, opt.q_max))
                                  : ChangePointConfig::zeros(M);
  std::set<ChangePointConfig> visited;
  double best_so_far = std::numeric_limits<double>::infinity();

  for (int step = 1;; ++step) {
    std::vector<ChangePointConfig> moves;
    switch (opt.strategy) {
      case Strategy::forward: moves = enumerate_step(current, opt.q_max); break;
      case Strategy::backward: moves = enumerate_decrements(current); break;
      case Strategy::stepwise: {
        moves = enumerate_step(current, opt.q_max);
        for (auto& d : enumerate_decrements(current)) moves.push_back(std::move(d));
        break;
      }
    }
    std::erase_if(moves, [&](const ChangePointConfig& c) { return visited.count(c) > 0; });

    SelectionStep rec;
    rec.step = step;
    if (moves.empty()) {
      rec.stop_reason = "no further configurations to fit";
      trace.steps.push_back(rec);
      break;
    }
    std::vector<ChangePointConfig> batch;
    if (step == 1) batch.push_back(current);
    batch.insert(batch.end(), moves.begin(), moves.end());

    const std::size_t first = trace.fits.size();
    trace.fits.resize(first + batch.size());
    parallel_for(batch.size(), opt.jobs, [&](std::size_t k) {
      auto fr = fit_candidate(panel, bases, batch[k], opt,
                              derive_seed(opt.master_seed, static_cast<std::uint64_t>(step), k));
      fr.step = step;
      fr.index = static_cast<int>(k);
      trace.fits[first + k] = std::move(fr);
    });

    std::vector<std::size_t> converged, fitted;
    for (std::size_t k = 0; k < batch.size(); ++k) {
      const auto idx = first + k;
      rec.fits.push_back(idx);
      visited.insert(batch[k]);
      if (step == 1 && k == 0) {
        if (trace.fits[idx].converged()) best_so_far = trace.fits[idx].dic();
        continue;  // the starting model is fit for reference, not chosen
      }
      if (!trace.fits[idx].aborted) fitted.push_back(idx);
      if (trace.fits[idx].converged()) converged.push_back(idx);
    }

    auto choice = detail::pick_min_dic(trace.fits, converged, current);
    if (!choice) {
      if (!opt.continue_on_nonconvergence || fitted.empty()) {
        rec.stop_reason = "no candidate passed the convergence gate";
        trace.steps.push_back(rec);
        break;
      }
      choice = detail::pick_min_dic(trace.fits, fitted, current);
    }
    if (opt.strategy == Strategy::stepwise && trace.fits[*choice].converged()) {
      if (!(trace.fits[*choice].dic() < best_so_far)) {
        rec.stop_reason = "no neighbouring configuration lowers the DIC";
        trace.steps.push_back(rec);
        break;
      }
    }
    if (trace.fits[*choice].converged()) best_so_far = std::min(best_so_far, trace.fits[*choice].dic());
    rec.chosen = trace.fits[*choice].config;
    rec.chosen_fit = *choice;
    current = *rec.chosen;
    trace.steps.push_back(rec);
  }

  std::vector<std::size_t> all_converged;
  for (std::size_t k = 0; k < trace.fits.size(); ++k)
    if (trace.fits[k].converged()) all_converged.push_back(k);
  std::optional<std::size_t> best;
  for (std::size_t k : all_converged) {
    if (!best) {
      best = k;
      continue;
    }
    const auto& a = trace.fits[k];
    const auto& b = trace.fits[*best];
    if (a.dic() < b.dic() - 1e-9 ||
        (std::abs(a.dic() - b.dic()) <= 1e-9 && a.config.total() < b.config.total()))
      best = k;
  }
  trace.final_fit = best;
  return trace;
}

/// Every config in {0..q_max}^M. Only meant as a test oracle for small M.
inline std::vector<FitRecord> run_exhaustive(std::shared_ptr<const TemperaturePanel> panel,
                                             std::shared_ptr<const BasisSet> bases, const SelectionOptions& opt) {
  const auto M = static_cast<std::size_t>(panel->locations());
  detail::require(M <= 4, "exhaustive search is limited to M <= 4");
  std::vector<ChangePointConfig> all{ChangePointConfig::zeros(M)};
  for (std::size_t i = 0; i < M; ++i) {
    std::vector<ChangePointConfig> next;
    for (const auto& c : all)
      for (int v = 0; v <= opt.q_max; ++v) {
        auto d = c;
        d.q[i] = v;
        next.push_back(d);
      }
    all = std::move(next);
  }
  std::vector<FitRecord> out(all.size());
  parallel_for(all.size(), opt.jobs, [&](std::size_t k) {
    out[k] = fit_candidate(panel, bases, all[k], opt, derive_seed(opt.master_seed, 0, k));
    out[k].index = static_cast<int>(k);
  });
  return out;
}

inline nlohmann::json to_json(const FitRecord& r) {
  nlohmann::json j{{"step", r.step}, {"index", r.index}, {"config", r.config.q}, {"seed", r.seed}};
  if (r.aborted) {
    j["aborted"] = true;
    j["error"] = r.error;
    j["converged"] = false;
    return j;
  }
  j["dic"] = r.report.dic;
  j["p_d"] = r.report.p_d;
  j["mean_deviance"] = r.report.mean_deviance;
  j["min_ess"] = r.report.min_ess;
  j["max_tau_sd"] = r.report.max_tau_sd;
  j["saved_draws"] = r.report.saved;
  j["converged"] = r.report.converged;
  j["failing"] = r.report.failing;
  return j;
}

inline nlohmann::json to_json(const SelectionTrace& t) {
  nlohmann::json j;
  j["strategy"] = to_string(t.strategy);
  j["master_seed"] = t.master_seed;
  j["fits"] = nlohmann::json::array();
  for (const auto& f : t.fits) j["fits"].push_back(to_json(f));
  j["steps"] = nlohmann::json::array();
  for (const auto& s : t.steps) {
    nlohmann::json sj{{"step", s.step}, {"fits", s.fits}};
    if (s.chosen) sj["chosen"] = s.chosen->q;
    if (!s.stop_reason.empty()) sj["stop_reason"] = s.stop_reason;
    j["steps"].push_back(sj);
  }
  if (t.final_fit) {
    j["final"] = t.fits[*t.final_fit].config.q;
    j["final_dic"] = t.fits[*t.final_fit].dic();
  } else {
    j["final"] = nullptr;
  }
  return j;
}

/// Plain-text table of the config chosen at each step with its DIC and minimum ESS.
inline std::string step_table(const SelectionTrace& t, const std::vector<std::string>& location_ids) {
  std::ostringstream os;
  os << std::left << std::setw(6) << "Step";
  for (const auto& id : location_ids) os << std::setw(std::max<int>(4, static_cast<int>(id.size()) + 2)) << id;
  os << std::right << std::setw(14) << "DIC" << std::setw(11) << "Min ESS" << "  Gate\n";
  for (const auto& s : t.steps) {
    if (!s.chosen_fit) {
      os << std::left << std::setw(6) << s.step << "stop: " << s.stop_reason << '\n';
      continue;
    }
    const auto& f = t.fits[*s.chosen_fit];
    os << std::left << std::setw(6) << s.step;
    for (std::size_t i = 0; i < location_ids.size(); ++i)
      os << std::setw(std::max<int>(4, static_cast<int>(location_ids[i].size()) + 2)) << f.config.q[i];
    os << std::right << std::fixed << std::setprecision(1) << std::setw(14) << f.dic() << std::setprecision(2)
       << std::setw(11) << f.report.min_ess << "  " << (f.converged() ? "pass" : "fail") << '\n';
  }
  if (t.final_fit) {
    const auto& f = t.fits[*t.final_fit];
    os << "final: " << f.config.str() << " (DIC " << std::fixed << std::setprecision(1) << f.dic() << ")\n";
  } else {
    os << "final: none (no converged model)\n";
  }
  return os.str();
}

}  // namespace slopecp

#endif
