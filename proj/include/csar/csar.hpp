#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <span>
#include <vector>

#include "csar/bandit.hpp"
#include "csar/errors.hpp"
#include "csar/estimators.hpp"
#include "csar/rng.hpp"

// Successive accepts and rejects for top-k identification under full-bandit
// feedback. Phase t estimates every surviving arm to accuracy eps_t = 2^-t with
// confidence delta_t = (6/pi^2) delta / t^2, accepts arms that beat the
// (k+1)-th order statistic by more than 2 eps_t, and rejects arms beaten by the
// k-th order statistic by the same margin.

namespace csar {

enum class CsarMode { exact_pac, eps_pac, horizon };
enum class EstimatorKind { est1, est2 };

inline CsarMode csar_mode_from_name(const std::string& s) {
  if (s == "exact" || s == "exact_pac") return CsarMode::exact_pac;
  if (s == "pac" || s == "eps_pac") return CsarMode::eps_pac;
  if (s == "horizon") return CsarMode::horizon;
  fail(Errc::invalid_params, "unknown csar mode '" + s + "'");
}

inline EstimatorKind estimator_from_cli(const std::string& s) {
  if (s == "est1") return EstimatorKind::est1;
  if (s == "est2") return EstimatorKind::est2;
  fail(Errc::invalid_params, "unknown estimator '" + s + "'");
}

struct CsarState {
  int phase = 0;
  double eps_t = 0.0;
  double delta_t = 0.0;
  std::vector<int> surviving;
  std::vector<int> accepted;
  std::vector<int> rejected;
  std::vector<int> top_set;
  std::map<int, double> estimates;  // this phase, surviving arms only
};

struct PhaseRecord {
  int phase = 0;
  double eps_t = 0.0;
  double delta_t = 0.0;
  int n_surviving = 0;
  int n_accepted = 0;
  std::int64_t pulls = 0;     // cumulative at end of phase
  double cum_regret = 0.0;
};

struct CsarConfig {
  CsarMode mode = CsarMode::exact_pac;
  EstimatorKind estimator = EstimatorKind::est1;
  double delta = 0.1;
  double eps = 0.0;            // eps_pac accuracy target
  std::int64_t horizon = 0;    // horizon mode budget T
  double c_prime = 1.0;        // horizon mode eps constant
  // Horizon mode runs a phase only while cumulative exploration stays within
  // this fraction of T; the rest of the budget exploits the chosen subset.
  double explore_fraction = 0.5;
  std::uint64_t seed = 1;
  int max_phases = 60;
  std::vector<std::int64_t> checkpoints;
  std::function<void(const CsarState&)> on_phase;
};

struct CsarResult {
  std::vector<int> chosen;  // ascending
  bool success = false;
  int phases = 0;
  std::int64_t total_pulls = 0;
  double final_regret = 0.0;
  std::map<int, int> termination_phase;
  std::vector<PhaseRecord> phase_records;
  std::vector<std::pair<std::int64_t, double>> curve;
};

inline std::pair<double, double> phase_schedule(int t, double delta) {
  require(t >= 1, Errc::invalid_params, "phase index starts at 1");
  require(delta > 0.0 && delta < 1.0, Errc::invalid_params, "delta must be in (0,1)");
  double eps_t = std::ldexp(1.0, -t);
  double delta_t = (6.0 / (std::numbers::pi * std::numbers::pi)) * delta / (static_cast<double>(t) * t);
  return {eps_t, delta_t};
}

// Latest phase by which an arm with this gap is resolved (accepted or
// rejected) when estimates track the truth: smallest t with 2 eps_t < gap,
// bounded by ceil(log2(4/gap)). Phases start at 1.
inline int per_arm_phase_bound(double gap) {
  require(gap >= 0.0, Errc::invalid_params, "gap must be nonnegative");
  require(gap > 0.0, Errc::unbounded, "zero gap never resolves");
  double raw = std::ceil(std::log2(4.0 / gap));
  return std::max(1, static_cast<int>(raw));
}

struct OrderStats {
  double kth = 0.0;
  double kth1 = 0.0;
  std::vector<int> ranking;  // accepted first (by index), then by estimate desc
};

inline OrderStats order_stats(const std::map<int, double>& estimates,
                              std::span<const int> accepted, int k) {
  int total = static_cast<int>(estimates.size() + accepted.size());
  require(total >= k + 1, Errc::invalid_params,
          "order statistics need more than k arms; the run should have returned");
  require(static_cast<int>(accepted.size()) < k, Errc::invalid_params,
          "k-th statistic undefined once k arms are accepted");
  OrderStats out;
  out.ranking.assign(accepted.begin(), accepted.end());
  std::sort(out.ranking.begin(), out.ranking.end());
  std::vector<std::pair<int, double>> by_est(estimates.begin(), estimates.end());
  std::stable_sort(by_est.begin(), by_est.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  for (const auto& pr : by_est) out.ranking.push_back(pr.first);
  int r = k - static_cast<int>(accepted.size());
  out.kth = by_est[r - 1].second;
  out.kth1 = by_est[r].second;
  return out;
}

// Uniform-sampling baseline: a fresh uniformly random k-subset every round.
struct BaselineResult {
  std::int64_t total_pulls = 0;
  double final_regret = 0.0;
  std::vector<std::pair<std::int64_t, double>> curve;
};

inline BaselineResult run_uniform_baseline(const BanditInstance& inst, std::int64_t horizon,
                                           std::uint64_t seed,
                                           std::vector<std::int64_t> checkpoints = {}) {
  validate_instance(inst);
  require(horizon >= 1, Errc::invalid_params, "horizon must be >= 1");
  RegretLedger led = make_ledger(inst, std::move(checkpoints));
  std::mt19937_64 eng = RngKey(seed).engine();
  for (std::int64_t t = 0; t < horizon; ++t) {
    std::vector<int> subset = random_k_subset(inst.n, inst.k, eng);
    record_pull(led, inst, subset);
  }
  return {led.pulls, led.cum_regret, std::move(led.curve)};
}

namespace detail {

inline std::int64_t projected_phase_pulls(const CsarConfig& cfg, int n_surviving, int n_accepted,
                                          int top_size, int k, double eps_t, double delta_t) {
  if (cfg.estimator == EstimatorKind::est1 || n_accepted == 0)
    return est1_pull_count(n_surviving, k, sample_count(eps_t, delta_t, n_surviving, k, k));
  return est2_pull_count(n_surviving, top_size, k, k - n_accepted, eps_t, delta_t);
}

}  // namespace detail

inline CsarResult run_csar(const CsarConfig& cfg, const BanditInstance& inst) {
  validate_instance(inst);
  int k = inst.k;
  double delta = cfg.delta;
  double eps_target = cfg.eps;
  std::int64_t horizon = 0;
  if (cfg.mode == CsarMode::horizon) {
    require(cfg.horizon >= 1, Errc::invalid_params, "horizon mode needs a positive budget");
    require(cfg.c_prime > 0.0, Errc::invalid_params, "c_prime must be positive");
    require(cfg.explore_fraction > 0.0 && cfg.explore_fraction <= 1.0, Errc::invalid_params,
            "explore_fraction must be in (0,1]");
    horizon = cfg.horizon;
    delta = 1.0 / (static_cast<double>(k) * static_cast<double>(horizon));
    eps_target = std::sqrt(cfg.c_prime * inst.n *
                           std::log(static_cast<double>(inst.n) * k * static_cast<double>(horizon)) /
                           static_cast<double>(horizon));
  } else if (cfg.mode == CsarMode::eps_pac) {
    require(cfg.eps > 0.0, Errc::invalid_params, "eps_pac mode needs a positive eps");
  }
  require(delta > 0.0 && delta < 1.0, Errc::invalid_params, "delta must be in (0,1)");
  bool eps_stop = cfg.mode != CsarMode::exact_pac;
  double eps_threshold = eps_stop ? eps_target / (2.0 * k) : 0.0;

  RegretLedger led = make_ledger(inst, cfg.checkpoints);
  RngKey key(cfg.seed);
  std::vector<int> surviving(inst.n);
  std::iota(surviving.begin(), surviving.end(), 0);
  std::vector<int> accepted, rejected, top_set;
  std::vector<int> ranking = surviving;  // pre-phase fallback ranking

  CsarResult res;
  bool returned_early = false;
  int t = 0;
  while (static_cast<int>(surviving.size() + accepted.size()) > k) {
    ++t;
    require(t <= cfg.max_phases, Errc::phase_limit,
            "no termination after " + std::to_string(cfg.max_phases) + " phases");
    auto [eps_t, delta_t] = phase_schedule(t, delta);
    if (cfg.mode == CsarMode::horizon) {
      std::int64_t projected = detail::projected_phase_pulls(
          cfg, static_cast<int>(surviving.size()), static_cast<int>(accepted.size()),
          static_cast<int>(top_set.size()), k, eps_t, delta_t);
      std::int64_t cap = static_cast<std::int64_t>(
          std::llround(cfg.explore_fraction * static_cast<double>(horizon)));
      if (led.pulls + projected > cap) {
        --t;  // phase not run
        break;
      }
    }

    EstimationRequest req;
    req.arms = surviving;
    req.k = k;
    req.eps = eps_t;
    req.delta = delta_t;
    EstimateReport rep;
    if (cfg.estimator == EstimatorKind::est2) {
      req.accepted = accepted;
      req.top_set = top_set;
      req.padding_pool = rejected;
      rep = est2(req, inst, key.child(t), led);
    } else {
      std::vector<int> pool = rejected;
      pool.insert(pool.end(), accepted.begin(), accepted.end());
      req.padding_pool = std::move(pool);
      rep = est1(req, inst, key.child(t), led);
    }
    std::map<int, double> est;
    for (int a : surviving) est[a] = rep.estimates.at(a);
    OrderStats stats = order_stats(est, accepted, k);
    ranking = stats.ranking;

    if (eps_stop && eps_t <= eps_threshold) {
      res.phase_records.push_back({t, eps_t, delta_t, static_cast<int>(surviving.size()),
                                   static_cast<int>(accepted.size()), led.pulls, led.cum_regret});
      for (int a : surviving) res.termination_phase.emplace(a, t);
      returned_early = true;
      break;
    }

    std::vector<int> accepts, rejects;
    for (int a : surviving) {
      if (est[a] - stats.kth1 > 2.0 * eps_t) accepts.push_back(a);
      else if (stats.kth - est[a] > 2.0 * eps_t) rejects.push_back(a);
    }
    for (int a : accepts) {
      accepted.push_back(a);
      res.termination_phase.emplace(a, t);
    }
    for (int a : rejects) {
      rejected.push_back(a);
      res.termination_phase.emplace(a, t);
    }
    std::sort(accepted.begin(), accepted.end());
    std::sort(rejected.begin(), rejected.end());
    if (!accepts.empty() || !rejects.empty()) {
      std::set<int> gone(accepts.begin(), accepts.end());
      gone.insert(rejects.begin(), rejects.end());
      std::erase_if(surviving, [&](int a) { return gone.count(a) > 0; });
    }
    // post-update ranking: accepted first, then surviving in estimate order
    std::vector<int> post_ranking(accepted.begin(), accepted.end());
    for (int a : ranking)
      if (std::find(surviving.begin(), surviving.end(), a) != surviving.end())
        post_ranking.push_back(a);
    int top_len = std::min<int>(2 * k, static_cast<int>(post_ranking.size()));
    top_set.assign(post_ranking.begin(), post_ranking.begin() + top_len);

    res.phase_records.push_back({t, eps_t, delta_t, static_cast<int>(surviving.size()),
                                 static_cast<int>(accepted.size()), led.pulls, led.cum_regret});
    if (cfg.on_phase) {
      CsarState snap;
      snap.phase = t;
      snap.eps_t = eps_t;
      snap.delta_t = delta_t;
      snap.surviving = surviving;
      snap.accepted = accepted;
      snap.rejected = rejected;
      snap.top_set = top_set;
      snap.estimates = est;
      cfg.on_phase(snap);
    }
    ranking = post_ranking;
  }
  res.phases = t;

  if (returned_early) {
    res.chosen.assign(ranking.begin(), ranking.begin() + k);
  } else {
    res.chosen = accepted;
    res.chosen.insert(res.chosen.end(), surviving.begin(), surviving.end());
    if (static_cast<int>(res.chosen.size()) > k) {
      // budget stop before any resolution: fall back to the ranking prefix
      res.chosen.assign(ranking.begin(), ranking.begin() + k);
    }
    for (int a : surviving) res.termination_phase.emplace(a, std::max(t, 1));
  }
  std::sort(res.chosen.begin(), res.chosen.end());
  res.success = res.chosen == optimal_subset(inst);

  if (cfg.mode == CsarMode::horizon && led.pulls < horizon)
    record_pulls(led, inst, res.chosen, horizon - led.pulls);

  res.total_pulls = led.pulls;
  res.final_regret = led.cum_regret;
  res.curve = std::move(led.curve);
  return res;
}

}  // namespace csar
