#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "csar/bandit.hpp"
#include "csar/errors.hpp"
#include "csar/linalg.hpp"
#include "csar/rng.hpp"

// Information-theoretic side of the sampling problem: for a distribution p
// over k-subsets, Lambda(p) = sum_S p(S) chi_S chi_S^T is the second-moment
// matrix of the observation directions, and
//   rho(p) = max_S chi_S^T Lambda(p)^{-1} chi_S
// lower-bounds the per-round information cost. The key inequality is
// rho(p) >= n/k for every p, with equality impossible to beat no matter how
// the design is tuned; it is certified pointwise through the bilinear bound
// (x^T A x)(x^T A^{-1} x) >= ||x||_2^4 for positive definite A.

namespace csar {

struct SubsetDistribution {
  int n = 0;
  int k = 0;
  std::vector<std::pair<std::vector<int>, double>> support;
};

inline void validate_distribution(const SubsetDistribution& d) {
  require(d.n >= 2 && d.k >= 1 && d.k <= d.n, Errc::invalid_params,
          "need 1 <= k <= n, n >= 2");
  require(!d.support.empty(), Errc::invalid_params, "empty support");
  double total = 0.0;
  for (const auto& [subset, p] : d.support) {
    validate_subset(d.n, d.k, subset);
    require(p >= 0.0, Errc::invalid_params, "negative probability");
    total += p;
  }
  require(std::abs(total - 1.0) <= 1e-9, Errc::invalid_params,
          "probabilities must sum to 1");
}

namespace detail {

// Visit every k-subset of {0..n-1} in lexicographic order.
template <typename Fn>
void for_each_subset(int n, int k, Fn&& fn) {
  std::vector<int> c(k);
  for (int i = 0; i < k; ++i) c[i] = i;
  while (true) {
    fn(c);
    int i = k - 1;
    while (i >= 0 && c[i] == n - k + i) --i;
    if (i < 0) break;
    ++c[i];
    for (int j = i + 1; j < k; ++j) c[j] = c[j - 1] + 1;
  }
}

}  // namespace detail

inline DenseMatrix lambda_matrix(const SubsetDistribution& d) {
  validate_distribution(d);
  DenseMatrix lam(d.n, d.n);
  for (const auto& [subset, p] : d.support)
    for (int i : subset)
      for (int j : subset) lam(i, j) += p;
  return lam;
}

struct RhoReport {
  double value = 0.0;
  bool infinite = false;  // Lambda singular: some subset direction is unseen
  std::vector<int> argmax;
};

inline RhoReport rho(const SubsetDistribution& d) {
  validate_distribution(d);
  require(d.n <= 16, Errc::too_large, "rho enumerates all k-subsets; n is capped at 16");
  DenseMatrix lam = lambda_matrix(d);
  RhoReport out;
  DenseMatrix inv(1, 1);
  try {
    inv = inverse(lam);
  } catch (const Error& e) {
    if (e.code() != Errc::singular) throw;
    out.infinite = true;
    out.value = std::numeric_limits<double>::infinity();
    return out;
  }
  out.value = -std::numeric_limits<double>::infinity();
  detail::for_each_subset(d.n, d.k, [&](const std::vector<int>& s) {
    double q = 0.0;
    for (int i : s)
      for (int j : s) q += inv(i, j);
    if (q > out.value) {
      out.value = q;
      out.argmax = s;
    }
  });
  return out;
}

struct BilinearReport {
  double lhs = 0.0;   // (x^T A x)(x^T A^{-1} x)
  double rhs = 0.0;   // ||x||_2^4
  bool ok = false;
};

inline BilinearReport bilinear_check(const DenseMatrix& a, const std::vector<double>& x) {
  require(a.rows == a.cols, Errc::invalid_params, "matrix must be square");
  require(static_cast<int>(x.size()) == a.rows, Errc::invalid_params, "dimension mismatch");
  std::vector<double> eigs = sym_eigenvalues(a);
  require(eigs.front() > 1e-10, Errc::not_positive_definite,
          "bilinear bound needs a positive definite matrix");
  DenseMatrix inv = inverse(a);
  double xax = 0.0, xinvx = 0.0, norm2 = 0.0;
  for (int i = 0; i < a.rows; ++i) {
    norm2 += x[i] * x[i];
    for (int j = 0; j < a.cols; ++j) {
      xax += x[i] * a(i, j) * x[j];
      xinvx += x[i] * inv(i, j) * x[j];
    }
  }
  BilinearReport out;
  out.lhs = xax * xinvx;
  out.rhs = norm2 * norm2;
  out.ok = out.lhs >= out.rhs * (1.0 - 1e-8);
  return out;
}

inline SubsetDistribution uniform_subset_distribution(int n, int k) {
  require(n >= 2 && k >= 1 && k <= n, Errc::invalid_params, "need 1 <= k <= n");
  require(n <= 16, Errc::too_large, "uniform distribution enumerates all k-subsets");
  SubsetDistribution d;
  d.n = n;
  d.k = k;
  detail::for_each_subset(n, k, [&](const std::vector<int>& s) { d.support.emplace_back(s, 0.0); });
  double p = 1.0 / static_cast<double>(d.support.size());
  for (auto& e : d.support) e.second = p;
  return d;
}

// Random distribution whose support always covers every arm: a staircase of
// wrap-around blocks guarantees coverage, and `extra` additional subsets are
// drawn uniformly. Weights are normalized exponentials.
inline SubsetDistribution random_subset_distribution(int n, int k, std::uint64_t seed,
                                                     int extra = 8) {
  require(n >= 2 && k >= 1 && k <= n, Errc::invalid_params, "need 1 <= k <= n");
  require(extra >= 0, Errc::invalid_params, "extra must be nonnegative");
  SubsetDistribution d;
  d.n = n;
  d.k = k;
  for (int start = 0; start < n; start += k) {
    std::vector<int> s(k);
    for (int i = 0; i < k; ++i) s[i] = (start + i) % n;
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    for (int a = 0; static_cast<int>(s.size()) < k; ++a)
      if (std::find(s.begin(), s.end(), a) == s.end()) s.push_back(a);
    std::sort(s.begin(), s.end());
    d.support.emplace_back(std::move(s), 0.0);
  }
  std::mt19937_64 eng = RngKey(seed).engine();
  for (int r = 0; r < extra; ++r)
    d.support.emplace_back(random_k_subset(n, k, eng), 0.0);
  std::exponential_distribution<double> expo(1.0);
  double total = 0.0;
  for (auto& e : d.support) {
    e.second = expo(eng);
    total += e.second;
  }
  for (auto& e : d.support) e.second /= total;
  return d;
}

inline nlohmann::json distribution_to_json(const SubsetDistribution& d) {
  nlohmann::json j;
  j["n"] = d.n;
  j["k"] = d.k;
  j["support"] = nlohmann::json::array();
  for (const auto& [subset, p] : d.support)
    j["support"].push_back({{"subset", subset}, {"p", p}});
  return j;
}

inline SubsetDistribution distribution_from_json(const nlohmann::json& j) {
  SubsetDistribution d;
  d.n = j.at("n").get<int>();
  d.k = j.at("k").get<int>();
  for (const auto& e : j.at("support"))
    d.support.emplace_back(e.at("subset").get<std::vector<int>>(), e.at("p").get<double>());
  validate_distribution(d);
  return d;
}

}  // namespace csar
