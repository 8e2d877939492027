#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <vector>

#include "csar/bandit.hpp"
#include "csar/errors.hpp"
#include "csar/hadamard.hpp"
#include "csar/linalg.hpp"
#include "csar/rng.hpp"

// Group estimators for full-bandit feedback. A block of arms is mapped onto the
// columns of a Hadamard matrix; each row's sign split gives two halves that are
// sampled as k-subsets (in k-sized groups when the order exceeds 2k). Row 0 of
// a normalized matrix is all +1, so its two halves are *summed* to observe the
// block total; every other row is a difference. Inverting the design recovers
// per-arm means with per-coordinate noise parameter 1/m.

namespace csar {

// Replications needed so each recovered coordinate is eps-accurate with
// probability 1 - delta/n_est. k_prime < k inflates the count by 2k/k_prime
// (conditional estimator with accepted arms embedded in every subset).
inline std::int64_t sample_count(double eps, double delta, int n_est, int k, int k_prime) {
  require(eps > 0.0 && eps <= 1.0, Errc::invalid_params, "eps must be in (0,1]");
  require(delta > 0.0 && delta < 1.0, Errc::invalid_params, "delta must be in (0,1)");
  require(n_est >= 1, Errc::invalid_params, "n_est must be >= 1");
  require(k >= 1 && k_prime >= 1 && k_prime <= k, Errc::invalid_params, "need 1 <= k_prime <= k");
  double factor = (k_prime < k) ? (2.0 * k / k_prime) : 1.0;
  double raw = factor * (2.0 / (eps * eps)) * std::log(2.0 * n_est / delta);
  return static_cast<std::int64_t>(std::ceil(raw));
}

struct EstimationRequest {
  std::vector<int> arms;          // surviving arms; estimates are kept for these
  int k = 0;                      // pulled subset size
  double eps = 0.0;
  double delta = 0.0;
  std::vector<int> accepted;      // embedded in every pulled subset (est2 only)
  std::vector<int> top_set;       // refreshed first by est2 to price the accepted arms
  std::vector<int> padding_pool;  // reusable arms for filling the last block
  std::int64_t fixed_m = 0;       // > 0: use this sample count instead of deriving it
};

struct EstimateReport {
  std::map<int, double> estimates;            // kept estimates, keyed by arm
  std::map<int, std::int64_t> participation;  // pulls whose subset contained the arm
  std::int64_t total_pulls = 0;
  std::int64_t m = 0;  // per-subset sample count of the main pass
  int blocks = 0;
};

namespace detail {

inline std::vector<int> sorted_unique(std::span<const int> xs) {
  std::vector<int> v(xs.begin(), xs.end());
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

inline void check_arm_list(const BanditInstance& inst, std::span<const int> arms, const char* what) {
  for (int a : arms)
    require(a >= 0 && a < inst.n, Errc::invalid_arm,
            std::string(what) + " contains out-of-range arm " + std::to_string(a));
  std::vector<int> v = sorted_unique(arms);
  require(v.size() == arms.size(), Errc::invalid_params, std::string(what) + " has duplicate arms");
}

// Chunk `arms` (ascending) into blocks of `width`. The last block is filled up
// with distinct reuse arms: first arms from earlier blocks, then the pool, in
// order. Every arm keeps exactly one estimate, from the block where it is a
// primary member; pad appearances are discarded.
struct Blocks {
  std::vector<std::vector<int>> members;
  std::vector<int> primary_count;
};

inline Blocks make_blocks(std::span<const int> arms_sorted, int width, std::span<const int> pool,
                          std::span<const int> forbidden) {
  Blocks out;
  size_t n = arms_sorted.size();
  for (size_t start = 0; start < n; start += width) {
    size_t len = std::min<size_t>(width, n - start);
    out.members.emplace_back(arms_sorted.begin() + start, arms_sorted.begin() + start + len);
    out.primary_count.push_back(static_cast<int>(len));
  }
  std::vector<int>& last = out.members.back();
  if (static_cast<int>(last.size()) < width) {
    std::set<int> used(last.begin(), last.end());
    std::set<int> banned(forbidden.begin(), forbidden.end());
    std::vector<int> fill_order(arms_sorted.begin(), arms_sorted.end() - last.size());
    fill_order.insert(fill_order.end(), pool.begin(), pool.end());
    for (int a : fill_order) {
      if (static_cast<int>(last.size()) == width) break;
      if (used.count(a) || banned.count(a)) continue;
      used.insert(a);
      last.push_back(a);
    }
    require(static_cast<int>(last.size()) == width, Errc::padding_exhausted,
            "cannot fill a block of " + std::to_string(width) + " distinct arms");
  }
  return out;
}

}  // namespace detail

// Estimate one block against a Hadamard design. `group_size` columns are pulled
// at a time (plus the implicit arms, if any, to reach subset size k). The row-0
// observation is a sum of both halves minus `z1_correction` (the doubled
// contribution of the implicit arms, once per sampled group).
struct BlockEstimate {
  std::vector<double> theta;  // per column of the design
  std::int64_t pulls = 0;
};

inline BlockEstimate estimate_block_hadamard(const HadamardMatrix& h, std::span<const int> block_arms,
                                             int group_size, std::int64_t m,
                                             std::span<const int> implicit_arms, double z1_correction,
                                             const BanditInstance& inst, const RngKey& key,
                                             RegretLedger& led,
                                             std::map<int, std::int64_t>* participation = nullptr) {
  int order = h.order;
  require(static_cast<int>(block_arms.size()) == order, Errc::invalid_params,
          "block size must equal the design order");
  std::vector<RowPartition> parts = row_partitions(h);
  std::vector<double> z(order, 0.0);
  BlockEstimate out;
  out.pulls = 0;
  std::vector<int> subset;
  subset.reserve(group_size + implicit_arms.size());
  std::vector<std::array<double, 2>> side_mean(order);
  for (int r = 0; r < order; ++r) {
    auto [minus_groups, plus_groups] = split_into_k_groups(parts[r], group_size);
    for (int side = 0; side < 2; ++side) {
      const auto& groups = (side == 0) ? minus_groups : plus_groups;
      std::mt19937_64 eng = key.child(r).child(side).engine();
      double sum_of_group_means = 0.0;
      for (const auto& grp : groups) {
        subset.clear();
        for (int c : grp) subset.push_back(block_arms[c]);
        subset.insert(subset.end(), implicit_arms.begin(), implicit_arms.end());
        double acc = 0.0;
        for (std::int64_t t = 0; t < m; ++t) acc += pull(inst, subset, eng);
        record_pulls(led, inst, subset, m);
        out.pulls += m;
        if (participation)
          for (int a : subset) (*participation)[a] += m;
        sum_of_group_means += acc / static_cast<double>(m);
      }
      side_mean[r][side] = sum_of_group_means;
    }
  }
  z[0] = side_mean[0][1] + side_mean[0][0] - z1_correction;
  for (int r = 1; r < order; ++r) z[r] = side_mean[r][1] - side_mean[r][0];
  out.theta.assign(order, 0.0);
  for (int c = 0; c < order; ++c) {
    double acc = 0.0;
    for (int r = 0; r < order; ++r) acc += h.at(r, c) * z[r];
    out.theta[c] = acc / static_cast<double>(order);
  }
  return out;
}

// Closed-form pull counts (used for tests and for horizon-budget projection).
inline int smallest_order_value(int k) {
  require(k >= 1, Errc::invalid_params, "k must be >= 1");
  for (int c = 1; c <= 64; ++c)
    if (constructible_order(2 * k * c)) return 2 * k * c;
  fail(Errc::no_order_found, "no constructible order for k=" + std::to_string(k));
}

inline std::int64_t est1_pull_count(int n_arms, int k, std::int64_t m) {
  int order = smallest_order_value(k);
  std::int64_t blocks = (n_arms + order - 1) / order;
  std::int64_t per_block = static_cast<std::int64_t>(order) * 2 * (order / 2 / k) * m;
  return blocks * per_block;
}

inline std::int64_t est2_pull_count(int n_surviving, int top_size, int k, int k_prime, double eps,
                                    double delta) {
  std::int64_t m_top = sample_count(eps, delta, top_size, k, k);
  std::int64_t m_out = sample_count(eps, delta, n_surviving, k, k_prime);
  int order = smallest_order_value(k_prime);
  std::int64_t blocks = (n_surviving + order - 1) / order;
  std::int64_t per_block = static_cast<std::int64_t>(order) * 2 * (order / 2 / k_prime) * m_out;
  return est1_pull_count(top_size, k, m_top) + blocks * per_block;
}

// EST1: unconditional group estimator over the surviving arms.
inline EstimateReport est1(const EstimationRequest& req, const BanditInstance& inst, const RngKey& key,
                           RegretLedger& led) {
  require(!req.arms.empty(), Errc::invalid_params, "est1 needs at least one arm");
  require(req.accepted.empty(), Errc::invalid_params, "est1 takes no accepted arms");
  require(req.k == inst.k, Errc::invalid_params, "request k must match the instance");
  detail::check_arm_list(inst, req.arms, "arms");
  std::vector<int> arms = detail::sorted_unique(req.arms);
  std::vector<int> pool = detail::sorted_unique(req.padding_pool);
  detail::check_arm_list(inst, pool, "padding pool");
  for (int a : pool)
    require(!std::binary_search(arms.begin(), arms.end(), a), Errc::invalid_params,
            "padding pool must be disjoint from the arm list");
  // original pool order matters for fill priority; keep it, drop duplicates
  std::vector<int> pool_ordered;
  {
    std::set<int> seen;
    for (int a : req.padding_pool)
      if (seen.insert(a).second) pool_ordered.push_back(a);
  }

  EstimateReport rep;
  rep.m = req.fixed_m > 0
              ? req.fixed_m
              : sample_count(req.eps, req.delta, static_cast<int>(arms.size()), req.k, req.k);
  auto [order, h] = smallest_order(req.k);
  detail::Blocks blocks = detail::make_blocks(arms, order, pool_ordered, {});
  rep.blocks = static_cast<int>(blocks.members.size());
  for (size_t b = 0; b < blocks.members.size(); ++b) {
    BlockEstimate be = estimate_block_hadamard(h, blocks.members[b], req.k, rep.m, {}, 0.0, inst,
                                               key.child(b), led, &rep.participation);
    rep.total_pulls += be.pulls;
    for (int i = 0; i < blocks.primary_count[b]; ++i)
      rep.estimates[blocks.members[b][i]] = be.theta[i];
  }
  return rep;
}

// EST2: conditional group estimator. Refreshes estimates on the top set first
// (plain EST1), then samples every subset with the accepted arms embedded,
// correcting the row-0 sum by their estimated total.
inline EstimateReport est2(const EstimationRequest& req, const BanditInstance& inst, const RngKey& key,
                           RegretLedger& led) {
  if (req.accepted.empty()) return est1(req, inst, key, led);
  require(!req.arms.empty(), Errc::invalid_params, "est2 needs at least one surviving arm");
  require(req.k == inst.k, Errc::invalid_params, "request k must match the instance");
  int k_prime = req.k - static_cast<int>(req.accepted.size());
  require(k_prime != 0, Errc::all_accepted, "all k arms accepted; the caller should have stopped");
  require(k_prime > 0, Errc::invalid_params, "more accepted arms than k");
  detail::check_arm_list(inst, req.arms, "arms");
  detail::check_arm_list(inst, req.accepted, "accepted");
  detail::check_arm_list(inst, req.top_set, "top set");
  std::vector<int> arms = detail::sorted_unique(req.arms);
  std::vector<int> acc = detail::sorted_unique(req.accepted);
  std::vector<int> top = detail::sorted_unique(req.top_set);
  require(!top.empty(), Errc::invalid_params, "est2 needs a nonempty top set");
  for (int a : acc) {
    require(std::binary_search(top.begin(), top.end(), a), Errc::invalid_params,
            "accepted arms must be contained in the top set");
    require(!std::binary_search(arms.begin(), arms.end(), a), Errc::invalid_params,
            "accepted arms must not appear among the surviving arms");
  }
  for (int a : top)
    require(std::binary_search(arms.begin(), arms.end(), a) ||
                std::binary_search(acc.begin(), acc.end(), a),
            Errc::invalid_params, "top set must consist of surviving or accepted arms");

  // Refresh the top set at the same accuracy; survivors outside it pad first.
  EstimationRequest top_req;
  top_req.arms = top;
  top_req.k = req.k;
  top_req.eps = req.eps;
  top_req.delta = req.delta;
  top_req.fixed_m = req.fixed_m;
  for (int a : arms)
    if (!std::binary_search(top.begin(), top.end(), a)) top_req.padding_pool.push_back(a);
  for (int a : req.padding_pool)
    if (!std::binary_search(top.begin(), top.end(), a)) top_req.padding_pool.push_back(a);
  EstimateReport top_rep = est1(top_req, inst, key.child(0), led);

  double accepted_total = 0.0;
  for (int a : acc) accepted_total += top_rep.estimates.at(a);

  EstimateReport rep;
  rep.m = req.fixed_m > 0
              ? req.fixed_m
              : sample_count(req.eps, req.delta, static_cast<int>(arms.size()), req.k, k_prime);
  auto [order, h] = smallest_order(k_prime);
  int groups_per_side = order / 2 / k_prime;
  double z1_correction = 2.0 * groups_per_side * accepted_total;
  std::vector<int> pool_ordered;
  {
    std::set<int> seen(acc.begin(), acc.end());  // accepted arms may never pad an est2 block
    for (int a : req.padding_pool)
      if (seen.insert(a).second) pool_ordered.push_back(a);
  }
  detail::Blocks blocks = detail::make_blocks(arms, order, pool_ordered, acc);
  rep.blocks = static_cast<int>(blocks.members.size());
  for (size_t b = 0; b < blocks.members.size(); ++b) {
    BlockEstimate be =
        estimate_block_hadamard(h, blocks.members[b], k_prime, rep.m, acc, z1_correction, inst,
                                key.child(1 + b), led, &rep.participation);
    rep.total_pulls += be.pulls;
    for (int i = 0; i < blocks.primary_count[b]; ++i)
      rep.estimates[blocks.members[b][i]] = be.theta[i];
  }
  // merge: outer estimates win for survivors; the top pass prices accepted arms
  for (int a : acc) rep.estimates[a] = top_rep.estimates.at(a);
  for (auto& [a, c] : top_rep.participation) rep.participation[a] += c;
  rep.total_pulls += top_rep.total_pulls;
  rep.blocks += top_rep.blocks;
  return rep;
}

// Leave-one-out baseline: blocks of k+1 arms, all k+1 leave-one-out subsets.
inline EstimateReport est_loo(std::span<const int> arm_list, int k, std::int64_t m,
                              const BanditInstance& inst, const RngKey& key, RegretLedger& led) {
  require(k == inst.k, Errc::invalid_params, "k must match the instance");
  require(m >= 1, Errc::invalid_params, "m must be >= 1");
  detail::check_arm_list(inst, arm_list, "arms");
  std::vector<int> arms = detail::sorted_unique(arm_list);
  require(!arms.empty(), Errc::invalid_params, "est_loo needs at least one arm");
  EstimateReport rep;
  rep.m = m;
  detail::Blocks blocks = detail::make_blocks(arms, k + 1, {}, {});
  rep.blocks = static_cast<int>(blocks.members.size());
  for (size_t b = 0; b < blocks.members.size(); ++b) {
    const std::vector<int>& mem = blocks.members[b];
    std::vector<double> mu(mem.size(), 0.0);
    for (size_t j = 0; j < mem.size(); ++j) {
      std::vector<int> subset;
      for (size_t i = 0; i < mem.size(); ++i)
        if (i != j) subset.push_back(mem[i]);
      std::mt19937_64 eng = key.child(b).child(j).engine();
      double acc = 0.0;
      for (std::int64_t t = 0; t < m; ++t) acc += pull(inst, subset, eng);
      record_pulls(led, inst, subset, m);
      rep.total_pulls += m;
      for (int a : subset) rep.participation[a] += m;
      mu[j] = acc / static_cast<double>(m);
    }
    double total = 0.0;
    for (double v : mu) total += v;
    total /= static_cast<double>(k);  // each arm appears in k of the k+1 subsets
    for (int i = 0; i < blocks.primary_count[b]; ++i) rep.estimates[mem[i]] = total - mu[i];
  }
  return rep;
}

// Balanced random sign matrix: k entries of +1 and k of -1 per row.
inline DenseMatrix random_sign_matrix(int k, std::mt19937_64& eng) {
  int n = 2 * k;
  DenseMatrix m(n, n, -1.0);
  for (int r = 0; r < n; ++r) {
    std::vector<int> cols = random_k_subset(n, k, eng);
    for (int c : cols) m(r, c) = 1.0;
  }
  return m;
}

// The design actually inverted: row 0's split is sampled as a sum (like the
// Hadamard row 0), so its effective row is all +1. A pure difference design
// would be singular -- every balanced row annihilates the all-ones vector.
inline DenseMatrix effective_design(const DenseMatrix& signs) {
  DenseMatrix m = signs;
  for (int c = 0; c < m.cols; ++c) m(0, c) = 1.0;
  return m;
}

inline BlockEstimate estimate_block_signs(const DenseMatrix& signs, std::span<const int> block_arms,
                                          int k, std::int64_t m, const BanditInstance& inst,
                                          const RngKey& key, RegretLedger& led,
                                          std::map<int, std::int64_t>* participation = nullptr) {
  int n = 2 * k;
  require(signs.rows == n && signs.cols == n, Errc::invalid_params, "sign matrix must be 2k x 2k");
  require(static_cast<int>(block_arms.size()) == n, Errc::invalid_params, "block size must be 2k");
  for (int r = 0; r < n; ++r) {
    int plus = 0;
    for (int c = 0; c < n; ++c) plus += (signs(r, c) > 0) ? 1 : 0;
    require(plus == k, Errc::invalid_params, "each sign row needs exactly k entries of +1");
  }
  std::vector<double> z(n, 0.0);
  BlockEstimate out;
  for (int r = 0; r < n; ++r) {
    double side_mean[2] = {0.0, 0.0};
    for (int side = 0; side < 2; ++side) {
      std::vector<int> subset;
      for (int c = 0; c < n; ++c)
        if ((signs(r, c) > 0) == (side == 1)) subset.push_back(block_arms[c]);
      std::mt19937_64 eng = key.child(r).child(side).engine();
      double acc = 0.0;
      for (std::int64_t t = 0; t < m; ++t) acc += pull(inst, subset, eng);
      record_pulls(led, inst, subset, m);
      out.pulls += m;
      if (participation)
        for (int a : subset) (*participation)[a] += m;
      side_mean[side] = acc / static_cast<double>(m);
    }
    z[r] = (r == 0) ? side_mean[1] + side_mean[0] : side_mean[1] - side_mean[0];
  }
  out.theta = solve(effective_design(signs), z);
  return out;
}

// Random-design baseline: per block, draw sign matrices until the effective
// design is numerically invertible (at most 32 attempts), then invert.
inline EstimateReport est_random_matrix(std::span<const int> arm_list, int k, std::int64_t m,
                                        const BanditInstance& inst, const RngKey& key,
                                        RegretLedger& led) {
  require(k == inst.k, Errc::invalid_params, "k must match the instance");
  require(m >= 1, Errc::invalid_params, "m must be >= 1");
  detail::check_arm_list(inst, arm_list, "arms");
  std::vector<int> arms = detail::sorted_unique(arm_list);
  require(!arms.empty(), Errc::invalid_params, "est_random_matrix needs at least one arm");
  EstimateReport rep;
  rep.m = m;
  detail::Blocks blocks = detail::make_blocks(arms, 2 * k, {}, {});
  rep.blocks = static_cast<int>(blocks.members.size());
  for (size_t b = 0; b < blocks.members.size(); ++b) {
    RngKey bk = key.child(b);
    std::mt19937_64 draw_eng = bk.child(0).engine();
    DenseMatrix signs;
    bool ok = false;
    // Balanced sign rows are singular surprisingly often (most draws, for the
    // 4x4 case), so the resample budget has to be generous.
    for (int attempt = 0; attempt < 512 && !ok; ++attempt) {
      signs = random_sign_matrix(k, draw_eng);
      try {
        DenseMatrix lu = effective_design(signs);
        std::vector<int> perm;
        detail::lu_factor(lu, perm);
        ok = true;
      } catch (const Error& e) {
        if (e.code() != Errc::singular) throw;
      }
    }
    require(ok, Errc::degenerate_design, "512 singular sign-matrix draws in a row");
    BlockEstimate be = estimate_block_signs(signs, blocks.members[b], k, m, inst, bk.child(1), led,
                                            &rep.participation);
    rep.total_pulls += be.pulls;
    for (int i = 0; i < blocks.primary_count[b]; ++i)
      rep.estimates[blocks.members[b][i]] = be.theta[i];
  }
  return rep;
}

}  // namespace csar
