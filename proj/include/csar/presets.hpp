#pragma once

#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "csar/bandit.hpp"
#include "csar/csar.hpp"
#include "csar/csv.hpp"
#include "csar/errors.hpp"
#include "csar/estimators.hpp"
#include "csar/linalg.hpp"
#include "csar/rng.hpp"
#include "csar/svg.hpp"

// Experiment presets. Each returns the files it would write (name -> content)
// plus a list of named pass/fail assertions, so the CLI and the test suite
// share one implementation. Replications are keyed by replication id, so
// results are identical for any worker count.

namespace csar {

struct StudyConfig {
  std::uint64_t seed = 1;
  int workers = 1;
  bool paper_scale = false;
  std::optional<int> n;
  std::optional<int> k;
  std::optional<int> reps;
  std::optional<std::int64_t> horizon;
  std::optional<Noise> noise;
};

struct Assertion {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct StudyResult {
  std::vector<std::pair<std::string, std::string>> files;  // filename -> content
  std::vector<Assertion> assertions;
  std::vector<std::string> log;
};

inline bool all_pass(const StudyResult& r) {
  for (const auto& a : r.assertions)
    if (!a.pass) return false;
  return true;
}

namespace detail {

template <typename Fn>
void parallel_reps(int reps, int workers, Fn&& fn) {
  if (workers < 1) workers = 1;
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex err_mu;
  auto work = [&] {
    for (int r; (r = next.fetch_add(1)) < reps;) {
      try {
        fn(r);
      } catch (...) {
        std::lock_guard<std::mutex> lk(err_mu);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  if (workers == 1 || reps <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    int count = std::min(workers, reps);
    for (int w = 0; w < count; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);
}

inline double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double mu = mean_of(v), acc = 0.0;
  for (double x : v) acc += (x - mu) * (x - mu);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

// (mse, max abs error) of an estimate report against the true means
inline std::pair<double, double> estimate_errors(const EstimateReport& rep,
                                                 const BanditInstance& inst) {
  double se = 0.0, mx = 0.0;
  for (const auto& [arm, est] : rep.estimates) {
    double e = est - inst.means[arm];
    se += e * e;
    mx = std::max(mx, std::abs(e));
  }
  return {se / static_cast<double>(rep.estimates.size()), mx};
}

inline std::string noise_detail(const BanditInstance& inst) { return noise_name(inst.noise); }

}  // namespace detail

// ---------------------------------------------------------------------------
// MSE study: Hadamard vs leave-one-out vs random sign designs at matched pull
// budgets across a grid of per-subset sample counts.
// ---------------------------------------------------------------------------
inline StudyResult run_mse_study(const StudyConfig& cfg) {
  int n = cfg.n.value_or(cfg.paper_scale ? 144 : 48);
  int k = cfg.k.value_or(cfg.paper_scale ? 8 : 4);
  int reps = cfg.reps.value_or(cfg.paper_scale ? 1000 : 200);
  Noise noise = cfg.noise.value_or(Noise::gaussian);
  require(reps >= 1, Errc::invalid_params, "need at least one replication");
  const std::vector<std::int64_t> m_grid = {8, 16, 32, 64, 128};
  const char* methods[3] = {"hadamard", "loo", "random"};

  struct Cell {
    double mse = 0.0, max_err = 0.0;
    std::int64_t pulls = 0;
  };
  const int g = static_cast<int>(m_grid.size());
  std::vector<std::array<Cell, 3>> cells(static_cast<std::size_t>(reps) * g);
  std::vector<int> all_arms(n);
  std::iota(all_arms.begin(), all_arms.end(), 0);
  RngKey root(cfg.seed);

  detail::parallel_reps(reps, cfg.workers, [&](int r) {
    RngKey rk = root.child(r);
    std::mt19937_64 meng = rk.child(0).engine();
    BanditInstance inst = make_uniform_means(n, k, noise, meng);
    for (int mi = 0; mi < g; ++mi) {
      std::int64_t m = m_grid[mi];
      RngKey mk = rk.child(1 + mi);
      auto& out = cells[static_cast<std::size_t>(r) * g + mi];
      {
        RegretLedger led = make_ledger(inst);
        EstimationRequest req;
        req.arms = all_arms;
        req.k = k;
        req.fixed_m = m;
        EstimateReport rep = est1(req, inst, mk.child(0), led);
        auto [mse, mx] = detail::estimate_errors(rep, inst);
        out[0] = {mse, mx, rep.total_pulls};
      }
      std::int64_t budget = est1_pull_count(n, k, m);
      {
        // leave-one-out burns (k+1) pulls per block per unit m; match budgets
        std::int64_t blocks_loo = (n + k) / (k + 1);
        std::int64_t per_m = blocks_loo * (k + 1);
        std::int64_t m_loo = std::max<std::int64_t>(1, (budget + per_m / 2) / per_m);
        RegretLedger led = make_ledger(inst);
        EstimateReport rep = est_loo(all_arms, k, m_loo, inst, mk.child(1), led);
        auto [mse, mx] = detail::estimate_errors(rep, inst);
        out[1] = {mse, mx, rep.total_pulls};
      }
      {
        // a random 2k x 2k design has the same pull cost per unit m as EST1
        RegretLedger led = make_ledger(inst);
        EstimateReport rep = est_random_matrix(all_arms, k, m, inst, mk.child(2), led);
        auto [mse, mx] = detail::estimate_errors(rep, inst);
        out[2] = {mse, mx, rep.total_pulls};
      }
    }
  });

  StudyResult res;
  std::string params = "n=" + std::to_string(n) + " k=" + std::to_string(k) +
                       " reps=" + std::to_string(reps) + " noise=" + noise_name(noise) +
                       " seed=" + std::to_string(cfg.seed);
  Csv raw({"rep", "m", "method", "mse", "max_err", "pulls"});
  raw.comment("preset: mse_study");
  raw.comment(params);
  {
    std::string grid = "m grid:";
    for (auto m : m_grid) grid += " " + std::to_string(m);
    raw.comment(grid);
  }
  for (int r = 0; r < reps; ++r)
    for (int mi = 0; mi < g; ++mi)
      for (int me = 0; me < 3; ++me) {
        const Cell& c = cells[static_cast<std::size_t>(r) * g + mi][me];
        raw.row(r, m_grid[mi], methods[me], c.mse, c.max_err, c.pulls);
      }

  // per (m, method) aggregates
  double mean_mse[3][8] = {};
  double sd_mse[3][8] = {};
  double mean_pulls[3][8] = {};
  for (int mi = 0; mi < g; ++mi)
    for (int me = 0; me < 3; ++me) {
      std::vector<double> ms, ps;
      for (int r = 0; r < reps; ++r) {
        const Cell& c = cells[static_cast<std::size_t>(r) * g + mi][me];
        ms.push_back(c.mse);
        ps.push_back(static_cast<double>(c.pulls));
      }
      mean_mse[me][mi] = detail::mean_of(ms);
      sd_mse[me][mi] = detail::sd_of(ms);
      mean_pulls[me][mi] = detail::mean_of(ps);
    }

  Csv summary({"m", "method", "mean_pulls", "mean_mse", "sd_mse"});
  summary.comment("preset: mse_study (aggregates)");
  summary.comment(params);
  for (int mi = 0; mi < g; ++mi)
    for (int me = 0; me < 3; ++me)
      summary.row(m_grid[mi], methods[me], mean_pulls[me][mi], mean_mse[me][mi], sd_mse[me][mi]);

  std::vector<Series> series(3);
  for (int me = 0; me < 3; ++me) {
    series[me].label = methods[me];
    for (int mi = 0; mi < g; ++mi)
      series[me].points.emplace_back(mean_pulls[me][mi], mean_mse[me][mi]);
  }
  PlotOptions opt;
  opt.title = "Recovery MSE vs pull budget";
  opt.xlabel = "pulls";
  opt.ylabel = "mean MSE";
  opt.logx = true;
  opt.logy = noise != Noise::zero;

  res.files.emplace_back("mse_study.csv", raw.str());
  res.files.emplace_back("mse_summary.csv", summary.str());
  if (noise != Noise::zero) res.files.emplace_back("mse_study.svg", render_plot(series, opt));

  if (noise == Noise::zero) {
    bool exact = true;
    for (const auto& arr : cells)
      for (const auto& c : arr) exact = exact && c.mse <= 1e-20;
    res.assertions.push_back({"zero_noise_exact", exact, "all methods recover exactly"});
  } else {
    bool ordering = true;
    std::string detail;
    for (int mi = 0; mi < g; ++mi) {
      bool here = mean_mse[0][mi] < mean_mse[1][mi] && mean_mse[0][mi] < mean_mse[2][mi];
      ordering = ordering && here;
      detail += (detail.empty() ? "" : "; ") + std::to_string(m_grid[mi]) + ": h=" +
                fmt_num(mean_mse[0][mi]) + " l=" + fmt_num(mean_mse[1][mi]) + " r=" +
                fmt_num(mean_mse[2][mi]);
    }
    res.assertions.push_back({"mse_ordering", ordering, detail});
    bool halving = true;
    std::string hdetail;
    for (int mi = 0; mi + 1 < g; ++mi) {
      double ratio = mean_mse[0][mi] / mean_mse[0][mi + 1];
      halving = halving && ratio >= 1.5 && ratio <= 3.0;
      hdetail += (hdetail.empty() ? "ratios:" : ",") + std::string(" ") + fmt_num(ratio);
    }
    res.assertions.push_back({"mse_halving", halving, hdetail});
  }
  for (int mi = 0; mi < g; ++mi)
    res.log.push_back("m=" + std::to_string(m_grid[mi]) + "  hadamard=" + fmt_num(mean_mse[0][mi]) +
                      "  loo=" + fmt_num(mean_mse[1][mi]) + "  random=" + fmt_num(mean_mse[2][mi]));
  return res;
}

// ---------------------------------------------------------------------------
// Condition-number study: MSE of random sign designs against their condition
// number, with the Hadamard design as the kappa = 1 control point.
// ---------------------------------------------------------------------------
inline StudyResult run_condition_study(const StudyConfig& cfg) {
  int k = cfg.k.value_or(4);
  int points = cfg.reps.value_or(cfg.paper_scale ? 1000 : 200);
  int inner = cfg.paper_scale ? 100 : 50;
  const std::int64_t m = 16;
  Noise noise = cfg.noise.value_or(Noise::gaussian);
  int n = 2 * k;

  RngKey root(cfg.seed);
  std::mt19937_64 meng = root.child(0).engine();
  BanditInstance inst = make_uniform_means(n, k, noise, meng);
  std::vector<int> arms(n);
  std::iota(arms.begin(), arms.end(), 0);

  struct Point {
    bool ok = false;
    double kappa = 0.0, mse = 0.0;
  };
  std::vector<Point> pts(std::max(points, 0));
  detail::parallel_reps(points, cfg.workers, [&](int i) {
    RngKey pk = root.child(1 + i);
    std::mt19937_64 draw = pk.child(0).engine();
    DenseMatrix signs = random_sign_matrix(k, draw);
    DenseMatrix eff = effective_design(signs);
    double kappa = 0.0;
    try {
      kappa = condition_number(eff);
    } catch (const Error& e) {
      if (e.code() != Errc::singular) throw;
      return;  // skipped, logged below
    }
    double acc = 0.0;
    try {
      for (int j = 0; j < inner; ++j) {
        RegretLedger led = make_ledger(inst);
        BlockEstimate be = estimate_block_signs(signs, arms, k, m, inst, pk.child(1 + j), led, nullptr);
        double se = 0.0;
        for (int a = 0; a < n; ++a) {
          double e = be.theta[a] - inst.means[a];
          se += e * e;
        }
        acc += se / n;
      }
    } catch (const Error& e) {
      if (e.code() != Errc::singular) throw;
      return;
    }
    pts[i] = {true, kappa, acc / inner};
  });

  std::vector<double> kappas, mses;
  int skipped = 0;
  for (const auto& p : pts) {
    if (!p.ok) {
      ++skipped;
      continue;
    }
    kappas.push_back(p.kappa);
    mses.push_back(p.mse);
  }
  require(!kappas.empty(), Errc::no_data, "every sampled design was singular");

  // control point: the Hadamard design of the same shape, when 2k is an order
  bool have_control = false;
  double control_kappa = 0.0, control_mse = 0.0;
  auto [order, h] = smallest_order(k);
  if (order == 2 * k) {
    DenseMatrix hd(order, order);
    for (int r = 0; r < order; ++r)
      for (int c = 0; c < order; ++c) hd(r, c) = h.at(r, c);
    control_kappa = condition_number(hd);
    double acc = 0.0;
    RngKey ck = root.child(1 + std::max(points, 0));
    for (int j = 0; j < inner; ++j) {
      RegretLedger led = make_ledger(inst);
      BlockEstimate be =
          estimate_block_hadamard(h, arms, k, m, {}, 0.0, inst, ck.child(j), led, nullptr);
      double se = 0.0;
      for (int a = 0; a < n; ++a) {
        double e = be.theta[a] - inst.means[a];
        se += e * e;
      }
      acc += se / n;
    }
    control_mse = acc / inner;
    have_control = true;
  }

  double sp = spearman(kappas, mses);

  StudyResult res;
  std::string params = "k=" + std::to_string(k) + " points=" + std::to_string(points) +
                       " inner=" + std::to_string(inner) + " m=" + std::to_string(m) +
                       " noise=" + noise_name(noise) + " seed=" + std::to_string(cfg.seed);
  Csv raw({"idx", "kind", "kappa", "mse"});
  raw.comment("preset: condition_study");
  raw.comment(params);
  for (int i = 0; i < points; ++i)
    if (pts[i].ok) raw.row(i, "random", pts[i].kappa, pts[i].mse);
  if (have_control) raw.row(-1, "control", control_kappa, control_mse);

  Csv summary({"points", "skipped", "spearman", "control_kappa", "control_mse"});
  summary.comment("preset: condition_study (aggregates)");
  summary.comment(params);
  summary.row(static_cast<int>(kappas.size()), skipped, sp, control_kappa, control_mse);

  std::vector<Series> series;
  Series scatter{"random designs", {}, false};
  for (std::size_t i = 0; i < kappas.size(); ++i) scatter.points.emplace_back(kappas[i], mses[i]);
  series.push_back(std::move(scatter));
  if (have_control) series.push_back({"hadamard control", {{control_kappa, control_mse}}, false});
  PlotOptions opt;
  opt.title = "Recovery MSE vs design condition number";
  opt.xlabel = "condition number";
  opt.ylabel = "mean MSE";
  opt.logx = true;
  opt.logy = true;

  res.files.emplace_back("condition_study.csv", raw.str());
  res.files.emplace_back("condition_summary.csv", summary.str());
  res.files.emplace_back("condition_study.svg", render_plot(series, opt));

  res.assertions.push_back(
      {"spearman", sp >= 0.8, "spearman=" + fmt_num(sp) + " over " +
                                  std::to_string(kappas.size()) + " designs (" +
                                  std::to_string(skipped) + " singular skipped)"});
  if (have_control) {
    double mean_random = detail::mean_of(mses);
    bool ok = std::abs(control_kappa - 1.0) <= 1e-8 && control_mse < mean_random;
    res.assertions.push_back({"control_point", ok,
                              "kappa=" + fmt_num(control_kappa) + " mse=" + fmt_num(control_mse) +
                                  " vs random mean " + fmt_num(mean_random)});
  }
  res.log.push_back("spearman=" + fmt_num(sp) + "  usable=" + std::to_string(kappas.size()) +
                    "  skipped=" + std::to_string(skipped));
  return res;
}

// ---------------------------------------------------------------------------
// Regret study: horizon-mode CSAR with EST2 against the uniform-random-subset
// baseline on uniform Bernoulli instances, for a sweep of k.
// ---------------------------------------------------------------------------
inline std::vector<std::int64_t> log_checkpoints(std::int64_t horizon, int count = 25) {
  require(horizon >= 2, Errc::invalid_params, "horizon too small for checkpoints");
  std::set<std::int64_t> s{horizon / 2, horizon};
  double lo = std::log10(10.0), hi = std::log10(static_cast<double>(horizon));
  if (hi <= lo) lo = 0.0;
  for (int i = 0; i < count; ++i) {
    double v = std::pow(10.0, lo + (hi - lo) * i / (count - 1));
    auto t = static_cast<std::int64_t>(std::llround(v));
    s.insert(std::clamp<std::int64_t>(t, 1, horizon));
  }
  return {s.begin(), s.end()};
}

inline StudyResult run_regret_study(const StudyConfig& cfg) {
  int n = cfg.n.value_or(24);
  std::vector<int> ks = cfg.k ? std::vector<int>{*cfg.k} : std::vector<int>{2, 3, 4};
  std::int64_t horizon = cfg.horizon.value_or(cfg.paper_scale ? 5000000 : 200000);
  int reps = cfg.reps.value_or(30);
  require(reps >= 1, Errc::invalid_params, "need at least one replication");
  std::vector<std::int64_t> cps = log_checkpoints(horizon);
  const std::size_t ncp = cps.size();

  StudyResult res;
  std::string params = "n=" + std::to_string(n) + " horizon=" + std::to_string(horizon) +
                       " reps=" + std::to_string(reps) + " seed=" + std::to_string(cfg.seed);
  Csv raw({"k", "rep", "method", "final_regret", "total_pulls"});
  raw.comment("preset: regret_study");
  raw.comment(params);
  Csv curves({"k", "method", "t", "mean_regret", "sd_regret"});
  curves.comment("preset: regret_study (mean curves)");
  curves.comment(params);
  Csv summary({"k", "reps", "csar_mean", "csar_sd", "uniform_mean", "uniform_sd", "win_rate",
               "flattening"});
  summary.comment("preset: regret_study (one row per k)");
  summary.comment(params);

  std::vector<Series> series;

  struct RepOut {
    double csar_final = 0.0, unif_final = 0.0;
    std::int64_t csar_pulls = 0;
    std::vector<double> csar_curve, unif_curve;
  };

  for (int k : ks) {
    std::vector<RepOut> outs(reps);
    detail::parallel_reps(reps, cfg.workers, [&](int r) {
      RngKey rk = RngKey(cfg.seed).child(static_cast<std::uint64_t>(k)).child(r);
      std::mt19937_64 ieng = rk.child(0).engine();
      BanditInstance inst = make_uniform_bernoulli(n, k, ieng);
      CsarConfig cc;
      cc.mode = CsarMode::horizon;
      cc.estimator = EstimatorKind::est2;
      cc.horizon = horizon;
      cc.seed = rk.child(1).value();
      cc.checkpoints = cps;
      CsarResult cres = run_csar(cc, inst);
      BaselineResult base = run_uniform_baseline(inst, horizon, rk.child(2).value(), cps);
      require(cres.curve.size() == ncp && base.curve.size() == ncp, Errc::invalid_params,
              "checkpoint curve incomplete");
      RepOut& o = outs[r];
      o.csar_final = cres.final_regret;
      o.unif_final = base.final_regret;
      o.csar_pulls = cres.total_pulls;
      for (auto& [t, v] : cres.curve) o.csar_curve.push_back(v);
      for (auto& [t, v] : base.curve) o.unif_curve.push_back(v);
    });

    std::vector<double> cf, uf;
    int wins = 0;
    for (int r = 0; r < reps; ++r) {
      cf.push_back(outs[r].csar_final);
      uf.push_back(outs[r].unif_final);
      if (outs[r].csar_final < outs[r].unif_final) ++wins;
      raw.row(k, r, "csar", outs[r].csar_final, outs[r].csar_pulls);
      raw.row(k, r, "uniform", outs[r].unif_final, horizon);
    }
    double win_rate = static_cast<double>(wins) / reps;

    std::vector<double> cmean(ncp), csd(ncp), umean(ncp), usd(ncp);
    for (std::size_t i = 0; i < ncp; ++i) {
      std::vector<double> cv, uv;
      for (int r = 0; r < reps; ++r) {
        cv.push_back(outs[r].csar_curve[i]);
        uv.push_back(outs[r].unif_curve[i]);
      }
      cmean[i] = detail::mean_of(cv);
      csd[i] = detail::sd_of(cv);
      umean[i] = detail::mean_of(uv);
      usd[i] = detail::sd_of(uv);
      curves.row(k, "csar", cps[i], cmean[i], csd[i]);
      curves.row(k, "uniform", cps[i], umean[i], usd[i]);
    }

    // flattening of the mean curve between T/2 and T
    std::size_t half_idx = 0, full_idx = ncp - 1;
    for (std::size_t i = 0; i < ncp; ++i)
      if (cps[i] == horizon / 2) half_idx = i;
    double flattening = (cmean[full_idx] - cmean[half_idx]) / std::max(cmean[half_idx], 1e-12);
    summary.row(k, reps, detail::mean_of(cf), detail::sd_of(cf), detail::mean_of(uf),
                detail::sd_of(uf), win_rate, flattening);

    Series cs{"csar k=" + std::to_string(k), {}, true};
    Series us{"uniform k=" + std::to_string(k), {}, true};
    for (std::size_t i = 0; i < ncp; ++i) {
      cs.points.emplace_back(static_cast<double>(cps[i]), cmean[i]);
      us.points.emplace_back(static_cast<double>(cps[i]), umean[i]);
    }
    series.push_back(std::move(cs));
    series.push_back(std::move(us));

    res.assertions.push_back({"win_rate_k" + std::to_string(k), win_rate >= 0.95,
                              "csar beats uniform in " + std::to_string(wins) + "/" +
                                  std::to_string(reps) + " replications"});
    if (k == ks.front())
      res.assertions.push_back({"flattening_k" + std::to_string(k), flattening <= 0.2,
                                "regret(T)-regret(T/2) = " + fmt_num(flattening) +
                                    " x regret(T/2)"});
    res.log.push_back("k=" + std::to_string(k) + "  csar=" + fmt_num(detail::mean_of(cf)) +
                      "  uniform=" + fmt_num(detail::mean_of(uf)) + "  win_rate=" +
                      fmt_num(win_rate) + "  flattening=" + fmt_num(flattening));
  }

  PlotOptions opt;
  opt.title = "Cumulative pseudo-regret";
  opt.xlabel = "round";
  opt.ylabel = "mean regret";
  opt.logx = true;
  res.files.emplace_back("regret_raw.csv", raw.str());
  res.files.emplace_back("regret_curves.csv", curves.str());
  res.files.emplace_back("regret_summary.csv", summary.str());
  res.files.emplace_back("regret_study.svg", render_plot(series, opt));
  return res;
}

// ---------------------------------------------------------------------------
// Sample-complexity scaling: total exact-PAC pulls against 1/eps on the
// bernoulli_epsilon_k family; the log-log slope should sit near 2.
// ---------------------------------------------------------------------------
inline StudyResult run_sample_scaling(const StudyConfig& cfg) {
  int n = cfg.n.value_or(12);
  int k = cfg.k.value_or(2);
  int reps = cfg.reps.value_or(20);
  double delta = 0.1;
  require(reps >= 1, Errc::invalid_params, "need at least one replication");
  const std::vector<double> eps_grid = {0.4, 0.2, 0.1};
  Noise noise = cfg.noise.value_or(Noise::bernoulli);

  struct Cell {
    std::int64_t pulls = 0;
    int phases = 0;
    bool success = false;
  };
  std::vector<std::vector<Cell>> cells(eps_grid.size(), std::vector<Cell>(reps));
  for (std::size_t ei = 0; ei < eps_grid.size(); ++ei) {
    BanditInstance inst = make_bernoulli_epsilon_k(n, k, eps_grid[ei]);
    inst.noise = noise;
    detail::parallel_reps(reps, cfg.workers, [&](int r) {
      CsarConfig cc;
      cc.mode = CsarMode::exact_pac;
      cc.estimator = EstimatorKind::est1;
      cc.delta = delta;
      cc.seed = RngKey(cfg.seed).child(ei).child(r).value();
      CsarResult cres = run_csar(cc, inst);
      cells[ei][r] = {cres.total_pulls, cres.phases, cres.success};
    });
  }

  StudyResult res;
  std::string params = "n=" + std::to_string(n) + " k=" + std::to_string(k) +
                       " delta=" + fmt_num(delta) + " reps=" + std::to_string(reps) +
                       " noise=" + noise_name(noise) + " seed=" + std::to_string(cfg.seed);
  Csv raw({"eps", "rep", "total_pulls", "phases", "success"});
  raw.comment("preset: sample_scaling");
  raw.comment(params);
  Csv summary({"eps", "mean_pulls", "sd_pulls", "mean_phases", "success_rate"});
  summary.comment("preset: sample_scaling (aggregates)");
  summary.comment(params);

  std::vector<double> xs, ys;
  for (std::size_t ei = 0; ei < eps_grid.size(); ++ei) {
    std::vector<double> ps, ph;
    int succ = 0;
    for (int r = 0; r < reps; ++r) {
      const Cell& c = cells[ei][r];
      raw.row(eps_grid[ei], r, c.pulls, c.phases, c.success);
      ps.push_back(static_cast<double>(c.pulls));
      ph.push_back(static_cast<double>(c.phases));
      if (c.success) ++succ;
    }
    double mp = detail::mean_of(ps);
    summary.row(eps_grid[ei], mp, detail::sd_of(ps), detail::mean_of(ph),
                static_cast<double>(succ) / reps);
    xs.push_back(std::log(1.0 / eps_grid[ei]));
    ys.push_back(std::log(mp));
    res.log.push_back("eps=" + fmt_num(eps_grid[ei]) + "  mean_pulls=" + fmt_num(mp) +
                      "  success=" + fmt_num(static_cast<double>(succ) / reps));
  }

  // least-squares slope of log(pulls) on log(1/eps)
  double mx = detail::mean_of(xs), my = detail::mean_of(ys);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    num += (xs[i] - mx) * (ys[i] - my);
    den += (xs[i] - mx) * (xs[i] - mx);
  }
  double slope = num / den;
  res.assertions.push_back(
      {"scaling_slope", slope >= 1.6 && slope <= 2.4, "slope=" + fmt_num(slope)});
  res.log.push_back("slope=" + fmt_num(slope));

  res.files.emplace_back("sample_scaling.csv", raw.str());
  res.files.emplace_back("sample_scaling_summary.csv", summary.str());
  return res;
}

// ---------------------------------------------------------------------------
// Regret tightness: exact-PAC CSAR with EST1 vs EST2 on a two-gap instance
// where accepted arms are expensive to keep sampling (dplus >> dminus).
// ---------------------------------------------------------------------------
inline StudyResult run_regret_tightness(const StudyConfig& cfg) {
  int n = cfg.n.value_or(16);
  int k = cfg.k.value_or(4);
  int reps = cfg.reps.value_or(30);
  double dplus = 1.0, dminus = 0.1, delta = 0.1;
  require(reps >= 1, Errc::invalid_params, "need at least one replication");
  BanditInstance inst = make_two_gap(n, k, dplus, dminus);
  if (cfg.noise) inst.noise = *cfg.noise;

  struct Cell {
    double regret = 0.0;
    std::int64_t pulls = 0;
    int phases = 0;
    bool success = false;
  };
  std::vector<std::array<Cell, 2>> cells(reps);
  detail::parallel_reps(reps, cfg.workers, [&](int r) {
    for (int est = 0; est < 2; ++est) {
      CsarConfig cc;
      cc.mode = CsarMode::exact_pac;
      cc.estimator = est == 0 ? EstimatorKind::est1 : EstimatorKind::est2;
      cc.delta = delta;
      cc.seed = RngKey(cfg.seed).child(r).child(est).value();
      CsarResult cres = run_csar(cc, inst);
      cells[r][est] = {cres.final_regret, cres.total_pulls, cres.phases, cres.success};
    }
  });

  StudyResult res;
  std::string params = "n=" + std::to_string(n) + " k=" + std::to_string(k) + " dplus=" +
                       fmt_num(dplus) + " dminus=" + fmt_num(dminus) + " delta=" + fmt_num(delta) +
                       " reps=" + std::to_string(reps) + " noise=" + noise_name(inst.noise) +
                       " seed=" + std::to_string(cfg.seed);
  Csv raw({"rep", "estimator", "final_regret", "total_pulls", "phases", "success"});
  raw.comment("preset: regret_tightness");
  raw.comment(params);
  const char* names[2] = {"est1", "est2"};
  std::vector<double> reg[2];
  for (int r = 0; r < reps; ++r)
    for (int est = 0; est < 2; ++est) {
      const Cell& c = cells[r][est];
      raw.row(r, names[est], c.regret, c.pulls, c.phases, c.success);
      reg[est].push_back(c.regret);
    }
  Csv summary({"estimator", "mean_regret", "sd_regret", "mean_pulls"});
  summary.comment("preset: regret_tightness (aggregates)");
  summary.comment(params);
  for (int est = 0; est < 2; ++est) {
    std::vector<double> ps;
    for (int r = 0; r < reps; ++r) ps.push_back(static_cast<double>(cells[r][est].pulls));
    summary.row(names[est], detail::mean_of(reg[est]), detail::sd_of(reg[est]),
                detail::mean_of(ps));
  }
  double m1 = detail::mean_of(reg[0]), m2 = detail::mean_of(reg[1]);
  res.assertions.push_back({"est2_below_est1", m2 < m1,
                            "est2 mean regret " + fmt_num(m2) + " vs est1 " + fmt_num(m1)});
  res.log.push_back("est1 mean regret=" + fmt_num(m1) + "  est2 mean regret=" + fmt_num(m2));

  res.files.emplace_back("regret_tightness.csv", raw.str());
  res.files.emplace_back("regret_tightness_summary.csv", summary.str());
  return res;
}

}  // namespace csar
