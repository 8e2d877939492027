// csarsim: simulation driver for top-k full-bandit estimation and selection.
//
// Subcommands: estimate, csar, mse-study, condition-study, regret-study,
// sample-scaling, regret-tightness, theory-check, hadamard. Global flags
// (--seed, --out, --paper-scale, --workers, --config) apply to every
// subcommand; a JSON config file mirrors all flags (explicit flags win).
// Exit codes: 0 ok, 2 preset assertion failed, 1 error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "csar/bandit.hpp"
#include "csar/csar.hpp"
#include "csar/csv.hpp"
#include "csar/errors.hpp"
#include "csar/estimators.hpp"
#include "csar/hadamard.hpp"
#include "csar/presets.hpp"
#include "csar/theory.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct GlobalOpts {
  std::uint64_t seed = 1;
  std::string out = ".";
  bool paper_scale = false;
  int workers = 1;
  std::string config_path;
};

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream f(path);
  if (!f.good()) csar::fail(csar::Errc::invalid_params, "cannot read config '" + path + "'");
  json j;
  f >> j;
  if (!j.is_object()) csar::fail(csar::Errc::invalid_params, "config root must be a JSON object");
  return j;
}

// Look up `key` in a JSON section, accepting both dash and underscore forms.
const json* jfind(const json& sec, std::string key) {
  if (!sec.is_object()) return nullptr;
  if (auto it = sec.find(key); it != sec.end()) return &*it;
  for (auto& c : key) c = (c == '-') ? '_' : c;
  if (auto it = sec.find(key); it != sec.end()) return &*it;
  return nullptr;
}

template <typename T>
void cfg_override(const json& sec, const char* key, const CLI::Option* opt, T& var) {
  if (opt && opt->count() > 0) return;  // explicit flag wins
  if (const json* v = jfind(sec, key)) v->get_to(var);
}

template <typename T>
void cfg_override(const json& sec, const char* key, const CLI::Option* opt,
                  std::optional<T>& var) {
  if (opt && opt->count() > 0) return;
  if (const json* v = jfind(sec, key)) var = v->get<T>();
}

const json* cfg_section(const json& root, const char* name) { return jfind(root, name); }

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

// Instance specs: a JSON object literal, a path to a JSON file, or
// "generator[:key=val,...]" with keys eps, dplus, dminus, gap,
// subset=0-2-5 (dash-separated arms).
csar::BanditInstance parse_instance(const std::string& spec, int n, int k,
                                    const std::string& noise, std::mt19937_64& eng) {
  if (!spec.empty() && spec.front() == '{') {
    csar::BanditInstance inst = json::parse(spec).get<csar::BanditInstance>();
    return inst;
  }
  if (spec.size() > 5 && spec.substr(spec.size() - 5) == ".json") {
    std::ifstream f(spec);
    if (!f.good()) csar::fail(csar::Errc::invalid_params, "cannot read instance '" + spec + "'");
    json j;
    f >> j;
    return j.get<csar::BanditInstance>();
  }
  std::string name = spec.empty() ? std::string("uniform_gaussian") : spec;
  csar::GeneratorParams params;
  auto colon = name.find(':');
  if (colon != std::string::npos) {
    for (const std::string& kv : split(name.substr(colon + 1), ',')) {
      auto eq = kv.find('=');
      if (eq == std::string::npos)
        csar::fail(csar::Errc::invalid_params, "malformed instance parameter '" + kv + "'");
      std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
      if (key == "eps") params.eps = std::stod(val);
      else if (key == "dplus") params.dplus = std::stod(val);
      else if (key == "dminus") params.dminus = std::stod(val);
      else if (key == "gap") params.gap = std::stod(val);
      else if (key == "subset") {
        for (const std::string& part : split(val, '-')) params.subset.push_back(std::stoi(part));
      } else {
        csar::fail(csar::Errc::invalid_params, "unknown instance parameter '" + key + "'");
      }
    }
    name = name.substr(0, colon);
  }
  csar::BanditInstance inst =
      csar::make_instance(csar::generator_from_name(name), n, k, params, eng);
  if (!noise.empty()) inst.noise = csar::noise_from_name(noise);
  return inst;
}

void write_file(const GlobalOpts& g, const std::string& name, const std::string& content) {
  fs::create_directories(g.out);
  fs::path p = fs::path(g.out) / name;
  std::ofstream f(p, std::ios::binary);
  if (!f.good()) csar::fail(csar::Errc::invalid_params, "cannot write '" + p.string() + "'");
  f << content;
  std::cout << "wrote " << p.string() << "\n";
}

int emit_study(const GlobalOpts& g, const csar::StudyResult& res) {
  for (const auto& [name, content] : res.files) write_file(g, name, content);
  for (const auto& line : res.log) std::cout << line << "\n";
  for (const auto& a : res.assertions)
    std::cout << (a.pass ? "[PASS] " : "[FAIL] ") << a.name << ": " << a.detail << "\n";
  return csar::all_pass(res) ? 0 : 2;
}

csar::StudyConfig study_config(const GlobalOpts& g, const std::optional<int>& n,
                               const std::optional<int>& k, const std::optional<int>& reps,
                               const std::optional<std::int64_t>& horizon,
                               const std::string& noise) {
  csar::StudyConfig sc;
  sc.seed = g.seed;
  sc.workers = g.workers;
  sc.paper_scale = g.paper_scale;
  sc.n = n;
  sc.k = k;
  sc.reps = reps;
  sc.horizon = horizon;
  if (!noise.empty()) sc.noise = csar::noise_from_name(noise);
  return sc;
}

// Attach the shared override flags every study subcommand accepts.
struct StudyFlags {
  std::optional<int> n, k, reps;
  std::optional<std::int64_t> horizon;
  std::string noise;
  CLI::Option *on = nullptr, *ok = nullptr, *oreps = nullptr, *ohor = nullptr, *onoise = nullptr;
};

void add_study_flags(CLI::App* cmd, StudyFlags& f) {
  f.on = cmd->add_option("--n", f.n, "override: number of arms");
  f.ok = cmd->add_option("--k", f.k, "override: subset size");
  f.oreps = cmd->add_option("--reps", f.reps, "override: replications");
  f.ohor = cmd->add_option("--horizon", f.horizon, "override: round budget");
  f.onoise = cmd->add_option("--noise", f.noise, "override: noise model (zero|gaussian|bernoulli)");
}

void study_overrides(const json& cfg, const char* section, StudyFlags& f) {
  if (const json* sec = cfg_section(cfg, section)) {
    cfg_override(*sec, "n", f.on, f.n);
    cfg_override(*sec, "k", f.ok, f.k);
    cfg_override(*sec, "reps", f.oreps, f.reps);
    cfg_override(*sec, "horizon", f.ohor, f.horizon);
    cfg_override(*sec, "noise", f.onoise, f.noise);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Top-k full-bandit simulation: group estimators, successive accept/reject runs, "
               "and reproduction presets"};
  app.require_subcommand(1);

  GlobalOpts g;
  auto* oseed = app.add_option("--seed", g.seed, "root RNG seed")->capture_default_str();
  auto* oout = app.add_option("--out", g.out, "output directory for CSV/SVG files")
                   ->capture_default_str();
  auto* opaper = app.add_flag("--paper-scale", g.paper_scale,
                              "use full-size experiment parameters (slow)");
  auto* oworkers =
      app.add_option("--workers", g.workers, "worker threads for replications")->capture_default_str();
  app.add_option("--config", g.config_path, "JSON file mirroring the flags; explicit flags win");

  // ---- estimate ----
  auto* est_cmd = app.add_subcommand(
      "estimate", "run one estimator repeatedly; CSV schema rep,method,mse,max_err,pulls");
  std::string est_method = "hadamard", est_noise = "gaussian", est_instance;
  int est_n = 16, est_k = 2, est_reps = 20;
  double est_eps = 0.2, est_delta = 0.1;
  std::int64_t est_m = 0;
  auto* e_method = est_cmd->add_option("--method", est_method, "hadamard|loo|random")
                       ->check(CLI::IsMember({"hadamard", "loo", "random"}))
                       ->capture_default_str();
  auto* e_n = est_cmd->add_option("--n", est_n, "number of arms")->capture_default_str();
  auto* e_k = est_cmd->add_option("--k", est_k, "subset size")->capture_default_str();
  auto* e_eps = est_cmd->add_option("--eps", est_eps, "accuracy target")->capture_default_str();
  auto* e_delta = est_cmd->add_option("--delta", est_delta, "failure budget")->capture_default_str();
  auto* e_noise = est_cmd->add_option("--noise", est_noise, "zero|gaussian|bernoulli")
                      ->capture_default_str();
  auto* e_reps = est_cmd->add_option("--reps", est_reps, "replications")->capture_default_str();
  auto* e_inst = est_cmd->add_option("--instance", est_instance,
                                     "instance spec (JSON, *.json file, or generator[:k=v,...])");
  auto* e_m = est_cmd->add_option("--m", est_m, "fixed per-subset sample count (overrides eps/delta)");

  // ---- csar ----
  auto* csar_cmd = app.add_subcommand(
      "csar", "run the accept/reject algorithm; emits per-phase and summary CSVs");
  std::string c_mode = "exact", c_estimator = "est1", c_noise, c_instance;
  int c_n = 8, c_k = 2, c_reps = 1;
  double c_delta = 0.1, c_eps = 0.0, c_cprime = 1.0, c_explore = 0.5;
  std::int64_t c_horizon = 0;
  auto* co_mode = csar_cmd->add_option("--mode", c_mode, "exact|pac|horizon")
                      ->check(CLI::IsMember({"exact", "pac", "horizon"}))
                      ->capture_default_str();
  auto* co_est = csar_cmd->add_option("--estimator", c_estimator, "est1|est2")
                     ->check(CLI::IsMember({"est1", "est2"}))
                     ->capture_default_str();
  auto* co_n = csar_cmd->add_option("--n", c_n, "number of arms")->capture_default_str();
  auto* co_k = csar_cmd->add_option("--k", c_k, "subset size")->capture_default_str();
  auto* co_delta = csar_cmd->add_option("--delta", c_delta, "failure budget")->capture_default_str();
  auto* co_eps = csar_cmd->add_option("--eps", c_eps, "pac mode accuracy target");
  auto* co_horizon = csar_cmd->add_option("--horizon", c_horizon, "horizon mode budget T");
  auto* co_cprime = csar_cmd->add_option("--cprime", c_cprime, "horizon mode eps constant")
                        ->capture_default_str();
  auto* co_explore = csar_cmd->add_option("--explore-fraction", c_explore,
                                          "horizon mode exploration budget share")
                         ->capture_default_str();
  auto* co_noise = csar_cmd->add_option("--noise", c_noise, "override instance noise");
  auto* co_inst = csar_cmd->add_option("--instance", c_instance,
                                       "instance spec (JSON, *.json file, or generator[:k=v,...])");
  auto* co_reps = csar_cmd->add_option("--reps", c_reps, "replications")->capture_default_str();

  // ---- studies ----
  StudyFlags mse_f, cond_f, reg_f, scale_f, tight_f;
  auto* mse_cmd = app.add_subcommand("mse-study",
                                     "estimator MSE at matched budgets (hadamard/loo/random)");
  add_study_flags(mse_cmd, mse_f);
  auto* cond_cmd =
      app.add_subcommand("condition-study", "MSE of random designs vs their condition number");
  add_study_flags(cond_cmd, cond_f);
  auto* reg_cmd =
      app.add_subcommand("regret-study", "horizon-mode regret vs the uniform baseline");
  add_study_flags(reg_cmd, reg_f);
  auto* scale_cmd =
      app.add_subcommand("sample-scaling", "exact-PAC pull counts across an accuracy grid");
  add_study_flags(scale_cmd, scale_f);
  auto* tight_cmd =
      app.add_subcommand("regret-tightness", "est1 vs est2 exploration regret on two-gap instances");
  add_study_flags(tight_cmd, tight_f);

  // ---- theory-check ----
  auto* theory_cmd = app.add_subcommand("theory-check", "information-matrix bound checks");
  std::string t_action = "rho", t_dist = "uniform";
  int t_n = 8, t_k = 2;
  theory_cmd->add_option("action", t_action, "check to run (rho)")
      ->check(CLI::IsMember({"rho"}));
  auto* t_on = theory_cmd->add_option("--n", t_n, "number of arms")->capture_default_str();
  auto* t_ok = theory_cmd->add_option("--k", t_k, "subset size")->capture_default_str();
  auto* t_od = theory_cmd->add_option("--dist", t_dist, "uniform|random|<file.json>")
                   ->capture_default_str();

  // ---- hadamard ----
  auto* had_cmd = app.add_subcommand("hadamard", "construct and print a Hadamard matrix");
  std::string h_action = "dump";
  int h_order = 0;
  bool h_check = false;
  had_cmd->add_option("action", h_action, "action (dump)")->check(CLI::IsMember({"dump"}));
  auto* h_oorder = had_cmd->add_option("--order", h_order, "matrix order")->required();
  had_cmd->add_flag("--check", h_check, "verify orthogonality; nonzero exit on failure");

  CLI11_PARSE(app, argc, argv);

  try {
    json cfg = load_config(g.config_path);
    cfg_override(cfg, "seed", oseed, g.seed);
    cfg_override(cfg, "out", oout, g.out);
    cfg_override(cfg, "paper-scale", opaper, g.paper_scale);
    cfg_override(cfg, "workers", oworkers, g.workers);
    if (g.workers < 1) csar::fail(csar::Errc::invalid_params, "--workers must be >= 1");

    if (est_cmd->parsed()) {
      if (const json* sec = cfg_section(cfg, "estimate")) {
        cfg_override(*sec, "method", e_method, est_method);
        cfg_override(*sec, "n", e_n, est_n);
        cfg_override(*sec, "k", e_k, est_k);
        cfg_override(*sec, "eps", e_eps, est_eps);
        cfg_override(*sec, "delta", e_delta, est_delta);
        cfg_override(*sec, "noise", e_noise, est_noise);
        cfg_override(*sec, "reps", e_reps, est_reps);
        cfg_override(*sec, "instance", e_inst, est_instance);
        cfg_override(*sec, "m", e_m, est_m);
      }
      struct Row {
        double mse, max_err;
        std::int64_t pulls;
      };
      std::vector<Row> rows(est_reps);
      csar::detail::parallel_reps(est_reps, g.workers, [&](int r) {
        csar::RngKey key = csar::RngKey(g.seed).child(r);
        std::mt19937_64 ieng = key.child(0).engine();
        csar::BanditInstance inst = parse_instance(est_instance, est_n, est_k, est_noise, ieng);
        csar::RegretLedger led = csar::make_ledger(inst);
        std::vector<int> arms(inst.n);
        std::iota(arms.begin(), arms.end(), 0);
        csar::EstimateReport rep;
        if (est_method == "hadamard") {
          csar::EstimationRequest req;
          req.arms = arms;
          req.k = inst.k;
          req.eps = est_eps;
          req.delta = est_delta;
          req.fixed_m = est_m;
          rep = csar::est1(req, inst, key.child(1), led);
        } else {
          std::int64_t m = est_m > 0 ? est_m
                                     : csar::sample_count(est_eps, est_delta, inst.n, inst.k,
                                                          inst.k);
          if (est_method == "loo") {
            std::int64_t budget = csar::est1_pull_count(inst.n, inst.k, m);
            std::int64_t per_m = ((inst.n + inst.k) / (inst.k + 1)) * (inst.k + 1);
            std::int64_t m_loo = std::max<std::int64_t>(1, (budget + per_m / 2) / per_m);
            rep = csar::est_loo(arms, inst.k, m_loo, inst, key.child(1), led);
          } else {
            rep = csar::est_random_matrix(arms, inst.k, m, inst, key.child(1), led);
          }
        }
        auto [mse, mx] = csar::detail::estimate_errors(rep, inst);
        rows[r] = {mse, mx, rep.total_pulls};
      });
      csar::Csv csv({"rep", "method", "mse", "max_err", "pulls"});
      csv.comment("estimate: method=" + est_method + " n=" + std::to_string(est_n) +
                  " k=" + std::to_string(est_k) + " eps=" + csar::fmt_num(est_eps) +
                  " delta=" + csar::fmt_num(est_delta) + " noise=" + est_noise +
                  " seed=" + std::to_string(g.seed));
      double mean_mse = 0.0;
      for (int r = 0; r < est_reps; ++r) {
        csv.row(r, est_method, rows[r].mse, rows[r].max_err, rows[r].pulls);
        mean_mse += rows[r].mse;
      }
      write_file(g, "estimate.csv", csv.str());
      std::cout << "mean mse over " << est_reps << " reps: " << csar::fmt_num(mean_mse / est_reps)
                << "\n";
      return 0;
    }

    if (csar_cmd->parsed()) {
      if (const json* sec = cfg_section(cfg, "csar")) {
        cfg_override(*sec, "mode", co_mode, c_mode);
        cfg_override(*sec, "estimator", co_est, c_estimator);
        cfg_override(*sec, "n", co_n, c_n);
        cfg_override(*sec, "k", co_k, c_k);
        cfg_override(*sec, "delta", co_delta, c_delta);
        cfg_override(*sec, "eps", co_eps, c_eps);
        cfg_override(*sec, "horizon", co_horizon, c_horizon);
        cfg_override(*sec, "cprime", co_cprime, c_cprime);
        cfg_override(*sec, "explore-fraction", co_explore, c_explore);
        cfg_override(*sec, "noise", co_noise, c_noise);
        cfg_override(*sec, "instance", co_inst, c_instance);
        cfg_override(*sec, "reps", co_reps, c_reps);
      }
      std::vector<csar::CsarResult> results(c_reps);
      csar::detail::parallel_reps(c_reps, g.workers, [&](int r) {
        csar::RngKey key = csar::RngKey(g.seed).child(r);
        std::mt19937_64 ieng = key.child(0).engine();
        csar::BanditInstance inst = parse_instance(c_instance, c_n, c_k, c_noise, ieng);
        csar::CsarConfig cc;
        cc.mode = csar::csar_mode_from_name(c_mode);
        cc.estimator = csar::estimator_from_cli(c_estimator);
        cc.delta = c_delta;
        cc.eps = c_eps;
        cc.horizon = c_horizon;
        cc.c_prime = c_cprime;
        cc.explore_fraction = c_explore;
        cc.seed = key.child(1).value();
        results[r] = csar::run_csar(cc, inst);
      });
      csar::Csv runs({"rep", "phase", "eps_t", "delta_t", "n_surviving", "n_accepted", "pulls",
                      "cum_regret"});
      runs.comment("csar: mode=" + c_mode + " estimator=" + c_estimator + " seed=" +
                   std::to_string(g.seed));
      csar::Csv summary({"rep", "success", "phases", "total_pulls", "final_regret"});
      summary.comment("csar: mode=" + c_mode + " estimator=" + c_estimator + " seed=" +
                      std::to_string(g.seed));
      int successes = 0;
      for (int r = 0; r < c_reps; ++r) {
        for (const auto& p : results[r].phase_records)
          runs.row(r, p.phase, p.eps_t, p.delta_t, p.n_surviving, p.n_accepted, p.pulls,
                   p.cum_regret);
        summary.row(r, results[r].success, results[r].phases, results[r].total_pulls,
                    results[r].final_regret);
        if (results[r].success) ++successes;
      }
      write_file(g, "csar_runs.csv", runs.str());
      write_file(g, "csar_summary.csv", summary.str());
      std::cout << "success " << successes << "/" << c_reps << "\n";
      return 0;
    }

    if (mse_cmd->parsed()) {
      study_overrides(cfg, "mse-study", mse_f);
      return emit_study(g, csar::run_mse_study(study_config(g, mse_f.n, mse_f.k, mse_f.reps,
                                                            mse_f.horizon, mse_f.noise)));
    }
    if (cond_cmd->parsed()) {
      study_overrides(cfg, "condition-study", cond_f);
      return emit_study(g, csar::run_condition_study(study_config(g, cond_f.n, cond_f.k,
                                                                  cond_f.reps, cond_f.horizon,
                                                                  cond_f.noise)));
    }
    if (reg_cmd->parsed()) {
      study_overrides(cfg, "regret-study", reg_f);
      return emit_study(g, csar::run_regret_study(study_config(g, reg_f.n, reg_f.k, reg_f.reps,
                                                               reg_f.horizon, reg_f.noise)));
    }
    if (scale_cmd->parsed()) {
      study_overrides(cfg, "sample-scaling", scale_f);
      return emit_study(g, csar::run_sample_scaling(study_config(g, scale_f.n, scale_f.k,
                                                                 scale_f.reps, scale_f.horizon,
                                                                 scale_f.noise)));
    }
    if (tight_cmd->parsed()) {
      study_overrides(cfg, "regret-tightness", tight_f);
      return emit_study(g, csar::run_regret_tightness(study_config(g, tight_f.n, tight_f.k,
                                                                   tight_f.reps, tight_f.horizon,
                                                                   tight_f.noise)));
    }

    if (theory_cmd->parsed()) {
      if (const json* sec = cfg_section(cfg, "theory-check")) {
        cfg_override(*sec, "n", t_on, t_n);
        cfg_override(*sec, "k", t_ok, t_k);
        cfg_override(*sec, "dist", t_od, t_dist);
      }
      csar::SubsetDistribution dist;
      if (t_dist == "uniform") {
        dist = csar::uniform_subset_distribution(t_n, t_k);
      } else if (t_dist == "random") {
        dist = csar::random_subset_distribution(t_n, t_k, g.seed);
      } else {
        std::ifstream f(t_dist);
        if (!f.good())
          csar::fail(csar::Errc::invalid_params, "cannot read distribution '" + t_dist + "'");
        json j;
        f >> j;
        dist = csar::distribution_from_json(j);
      }
      csar::RhoReport rep = csar::rho(dist);
      double bound = static_cast<double>(dist.n) / dist.k;
      bool pass = rep.infinite || rep.value >= bound - 1e-8;
      if (rep.infinite)
        std::cout << "rho = infinite (singular information matrix)\n";
      else
        std::cout << "rho = " << csar::fmt_num(rep.value) << "\n";
      std::cout << "n/k = " << csar::fmt_num(bound) << "\n"
                << (pass ? "PASS" : "FAIL") << ": rho >= n/k\n";
      return pass ? 0 : 2;
    }

    if (had_cmd->parsed()) {
      if (const json* sec = cfg_section(cfg, "hadamard")) {
        cfg_override(*sec, "order", h_oorder, h_order);
      }
      csar::HadamardMatrix h = csar::build_order(h_order);
      std::cout << csar::format_rows(h);
      if (h_check) {
        bool ok = csar::is_hadamard(h);
        std::cout << (ok ? "check: OK" : "check: FAILED") << "\n";
        return ok ? 0 : 2;
      }
      return 0;
    }
  } catch (const csar::Error& e) {
    std::cerr << "error (" << csar::errc_name(e.code()) << "): " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
