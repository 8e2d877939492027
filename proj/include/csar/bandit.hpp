#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "csar/errors.hpp"
#include "csar/rng.hpp"

namespace csar {

enum class Noise { gaussian, bernoulli, zero };

inline std::string noise_name(Noise n) {
  switch (n) {
    case Noise::gaussian: return "gaussian";
    case Noise::bernoulli: return "bernoulli";
    case Noise::zero: return "zero";
  }
  return "?";
}

inline Noise noise_from_name(const std::string& s) {
  if (s == "gaussian") return Noise::gaussian;
  if (s == "bernoulli") return Noise::bernoulli;
  if (s == "zero") return Noise::zero;
  fail(Errc::invalid_params, "unknown noise kind '" + s + "'");
}

// Top-k full-bandit instance: n arms with fixed means, rewards observed only as
// the sum over a pulled size-k subset.
struct BanditInstance {
  int n = 0;
  int k = 0;
  std::vector<double> means;
  Noise noise = Noise::gaussian;
};

inline void validate_instance(const BanditInstance& inst) {
  require(inst.n >= 2 && inst.k >= 1 && 2 * inst.k <= inst.n, Errc::invalid_params,
          "need 1 <= k <= n/2, got n=" + std::to_string(inst.n) + " k=" + std::to_string(inst.k));
  require(static_cast<int>(inst.means.size()) == inst.n, Errc::invalid_params,
          "means length must equal n");
  for (double m : inst.means) {
    require(std::isfinite(m), Errc::invalid_params, "means must be finite");
    if (inst.noise == Noise::bernoulli)
      require(m >= 0.0 && m <= 1.0, Errc::invalid_params, "bernoulli means must lie in [0,1]");
  }
}

inline void validate_subset(int n, int k, std::span<const int> subset) {
  require(static_cast<int>(subset.size()) == k, Errc::invalid_subset,
          "subset size must equal k=" + std::to_string(k));
  for (size_t i = 0; i < subset.size(); ++i) {
    require(subset[i] >= 0 && subset[i] < n, Errc::invalid_arm,
            "arm index out of range: " + std::to_string(subset[i]));
    for (size_t j = i + 1; j < subset.size(); ++j)
      require(subset[i] != subset[j], Errc::invalid_subset, "subset arms must be distinct");
  }
}

inline void validate_subset(const BanditInstance& inst, std::span<const int> subset) {
  validate_subset(inst.n, inst.k, subset);
}

inline double subset_mean(const BanditInstance& inst, std::span<const int> subset) {
  double s = 0.0;
  for (int a : subset) s += inst.means[a];
  return s;
}

// One observation: independent per-arm draws, summed. Zero noise returns the
// exact subset mean.
inline double pull(const BanditInstance& inst, std::span<const int> subset, std::mt19937_64& eng) {
  validate_subset(inst, subset);
  switch (inst.noise) {
    case Noise::zero:
      return subset_mean(inst, subset);
    case Noise::gaussian: {
      std::normal_distribution<double> gauss(0.0, 1.0);
      double s = 0.0;
      for (int a : subset) s += inst.means[a] + gauss(eng);
      return s;
    }
    case Noise::bernoulli: {
      double s = 0.0;
      for (int a : subset) {
        std::bernoulli_distribution coin(inst.means[a]);
        s += coin(eng) ? 1.0 : 0.0;
      }
      return s;
    }
  }
  fail(Errc::invalid_params, "unreachable noise kind");
}

// Arms ranked by mean (descending), ties broken by index. The first k are the
// canonical optimal subset.
inline std::vector<int> rank_by_mean(const BanditInstance& inst) {
  std::vector<int> order(inst.n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return inst.means[a] > inst.means[b]; });
  return order;
}

inline std::vector<int> optimal_subset(const BanditInstance& inst) {
  std::vector<int> order = rank_by_mean(inst);
  std::vector<int> top(order.begin(), order.begin() + inst.k);
  std::sort(top.begin(), top.end());
  return top;
}

struct GapProfile {
  std::vector<double> gaps;  // per arm
  double min_gap = 0.0;
};

// Gap of a top-k arm is its distance to the (k+1)-th largest mean; gap of any
// other arm is its distance to the k-th largest mean. Ties make gaps 0.
inline GapProfile gap_profile(const BanditInstance& inst) {
  validate_instance(inst);
  std::vector<int> order = rank_by_mean(inst);
  double theta_k = inst.means[order[inst.k - 1]];
  double theta_k1 = inst.means[order[inst.k]];
  GapProfile g;
  g.gaps.assign(inst.n, 0.0);
  std::vector<char> in_top(inst.n, 0);
  for (int i = 0; i < inst.k; ++i) in_top[order[i]] = 1;
  for (int a = 0; a < inst.n; ++a)
    g.gaps[a] = in_top[a] ? inst.means[a] - theta_k1 : theta_k - inst.means[a];
  g.min_gap = *std::min_element(g.gaps.begin(), g.gaps.end());
  return g;
}

// Pseudo-regret accounting. Every pull of subset S adds mu_star - mu(S) in
// expectation. Optional checkpoints capture the cumulative curve at exact pull
// counts (batched recording interpolates linearly inside a same-subset batch,
// which is exact for pseudo-regret).
struct RegretLedger {
  double mu_star = 0.0;
  std::int64_t pulls = 0;
  double cum_regret = 0.0;
  std::vector<std::int64_t> checkpoints;  // ascending
  std::vector<std::pair<std::int64_t, double>> curve;
  size_t next_cp = 0;
};

inline RegretLedger make_ledger(const BanditInstance& inst,
                                std::vector<std::int64_t> checkpoints = {}) {
  RegretLedger led;
  std::vector<int> top = optimal_subset(inst);
  led.mu_star = subset_mean(inst, top);
  std::sort(checkpoints.begin(), checkpoints.end());
  checkpoints.erase(std::unique(checkpoints.begin(), checkpoints.end()), checkpoints.end());
  led.checkpoints = std::move(checkpoints);
  return led;
}

inline void record_pulls(RegretLedger& led, const BanditInstance& inst, std::span<const int> subset,
                         std::int64_t count) {
  validate_subset(inst, subset);
  require(count >= 0, Errc::invalid_params, "pull count must be >= 0");
  double per_pull = led.mu_star - subset_mean(inst, subset);
  while (led.next_cp < led.checkpoints.size() && led.checkpoints[led.next_cp] <= led.pulls + count) {
    std::int64_t cp = led.checkpoints[led.next_cp];
    led.curve.emplace_back(cp, led.cum_regret + per_pull * static_cast<double>(cp - led.pulls));
    ++led.next_cp;
  }
  led.cum_regret += per_pull * static_cast<double>(count);
  led.pulls += count;
}

inline void record_pull(RegretLedger& led, const BanditInstance& inst, std::span<const int> subset) {
  record_pulls(led, inst, subset, 1);
}

// --- Instance generators -----------------------------------------------------

inline BanditInstance make_uniform_means(int n, int k, Noise noise, std::mt19937_64& eng) {
  BanditInstance inst{n, k, {}, noise};
  inst.means.resize(n);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (double& m : inst.means) m = unif(eng);
  validate_instance(inst);
  return inst;
}

inline BanditInstance make_uniform_gaussian(int n, int k, std::mt19937_64& eng) {
  return make_uniform_means(n, k, Noise::gaussian, eng);
}

inline BanditInstance make_uniform_bernoulli(int n, int k, std::mt19937_64& eng) {
  return make_uniform_means(n, k, Noise::bernoulli, eng);
}

// Top k arms at 1/2 + eps/k, the rest at 1/2; Bernoulli rewards.
inline BanditInstance make_bernoulli_epsilon_k(int n, int k, double eps) {
  require(eps > 0.0, Errc::invalid_params, "eps must be positive");
  BanditInstance inst{n, k, {}, Noise::bernoulli};
  inst.means.assign(n, 0.5);
  for (int i = 0; i < k; ++i) inst.means[i] = 0.5 + eps / k;
  validate_instance(inst);
  return inst;
}

// k-1 arms at +dplus, one arm at 0, the rest at -dminus; Gaussian rewards.
inline BanditInstance make_two_gap(int n, int k, double dplus, double dminus) {
  require(dplus > 0.0 && dminus > 0.0, Errc::invalid_params, "gaps must be positive");
  BanditInstance inst{n, k, {}, Noise::gaussian};
  inst.means.assign(n, -dminus);
  for (int i = 0; i < k - 1; ++i) inst.means[i] = dplus;
  inst.means[k - 1] = 0.0;
  validate_instance(inst);
  return inst;
}

// Top k arms at +gap, the rest at 0; Gaussian rewards.
inline BanditInstance make_equal_gap(int n, int k, double gap) {
  require(gap > 0.0, Errc::invalid_params, "gap must be positive");
  BanditInstance inst{n, k, {}, Noise::gaussian};
  inst.means.assign(n, 0.0);
  for (int i = 0; i < k; ++i) inst.means[i] = gap;
  validate_instance(inst);
  return inst;
}

// Arms in S at eps/k, the rest at 0; Gaussian rewards.
inline BanditInstance make_planted_subset(int n, int k, std::span<const int> subset, double eps) {
  require(eps > 0.0, Errc::invalid_params, "eps must be positive");
  require(static_cast<int>(subset.size()) == k, Errc::invalid_params, "planted subset must have size k");
  BanditInstance inst{n, k, {}, Noise::gaussian};
  inst.means.assign(n, 0.0);
  for (int a : subset) {
    require(a >= 0 && a < n, Errc::invalid_arm, "planted arm out of range");
    inst.means[a] = eps / k;
  }
  validate_instance(inst);
  return inst;
}

inline BanditInstance make_flat_null(int n, int k) {
  BanditInstance inst{n, k, std::vector<double>(n, 0.0), Noise::gaussian};
  validate_instance(inst);
  return inst;
}

enum class GeneratorKind {
  uniform_gaussian,
  uniform_bernoulli,
  bernoulli_epsilon_k,
  two_gap,
  equal_gap,
  planted_subset,
  flat_null,
};

struct GeneratorParams {
  double eps = 0.0;
  double dplus = 0.0;
  double dminus = 0.0;
  double gap = 0.0;
  std::vector<int> subset;
};

inline BanditInstance make_instance(GeneratorKind kind, int n, int k, const GeneratorParams& p,
                                    std::mt19937_64& eng) {
  switch (kind) {
    case GeneratorKind::uniform_gaussian: return make_uniform_gaussian(n, k, eng);
    case GeneratorKind::uniform_bernoulli: return make_uniform_bernoulli(n, k, eng);
    case GeneratorKind::bernoulli_epsilon_k: return make_bernoulli_epsilon_k(n, k, p.eps);
    case GeneratorKind::two_gap: return make_two_gap(n, k, p.dplus, p.dminus);
    case GeneratorKind::equal_gap: return make_equal_gap(n, k, p.gap);
    case GeneratorKind::planted_subset: return make_planted_subset(n, k, p.subset, p.eps);
    case GeneratorKind::flat_null: return make_flat_null(n, k);
  }
  fail(Errc::invalid_params, "unknown generator kind");
}

inline GeneratorKind generator_from_name(const std::string& s) {
  if (s == "uniform_gaussian") return GeneratorKind::uniform_gaussian;
  if (s == "uniform_bernoulli") return GeneratorKind::uniform_bernoulli;
  if (s == "bernoulli_epsilon_k") return GeneratorKind::bernoulli_epsilon_k;
  if (s == "two_gap") return GeneratorKind::two_gap;
  if (s == "equal_gap") return GeneratorKind::equal_gap;
  if (s == "planted_subset") return GeneratorKind::planted_subset;
  if (s == "flat_null") return GeneratorKind::flat_null;
  fail(Errc::invalid_params, "unknown generator '" + s + "'");
}

// --- JSON --------------------------------------------------------------------

inline void to_json(nlohmann::json& j, const BanditInstance& inst) {
  j = nlohmann::json{{"n", inst.n}, {"k", inst.k}, {"means", inst.means}, {"noise", noise_name(inst.noise)}};
}

inline void from_json(const nlohmann::json& j, BanditInstance& inst) {
  inst.n = j.at("n").get<int>();
  inst.k = j.at("k").get<int>();
  inst.means = j.at("means").get<std::vector<double>>();
  inst.noise = noise_from_name(j.at("noise").get<std::string>());
  validate_instance(inst);
}

}  // namespace csar
