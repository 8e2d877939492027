#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "csar/errors.hpp"

namespace csar {

// Square +/-1 matrix with H * H^T = N * I over the integers. Kept in normalized
// form: first row and first column are all +1, which makes every other row and
// column balanced (N/2 entries of each sign).
struct HadamardMatrix {
  int order = 0;
  std::vector<std::int8_t> entries;  // row-major, values +1 / -1

  int at(int r, int c) const { return entries[static_cast<size_t>(r) * order + c]; }
  void set(int r, int c, int v) { entries[static_cast<size_t>(r) * order + c] = static_cast<std::int8_t>(v); }
};

inline bool is_hadamard(const HadamardMatrix& h) {
  int n = h.order;
  if (n <= 0 || static_cast<int>(h.entries.size()) != n * n) return false;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      std::int64_t dot = 0;
      for (int c = 0; c < n; ++c) dot += static_cast<std::int64_t>(h.at(i, c)) * h.at(j, c);
      if (dot != (i == j ? n : 0)) return false;
    }
  return true;
}

inline void normalize(HadamardMatrix& h) {
  int n = h.order;
  for (int c = 0; c < n; ++c)
    if (h.at(0, c) < 0)
      for (int r = 0; r < n; ++r) h.set(r, c, -h.at(r, c));
  for (int r = 1; r < n; ++r)
    if (h.at(r, 0) < 0)
      for (int c = 0; c < n; ++c) h.set(r, c, -h.at(r, c));
}

// Order 2^m by Kronecker doubling of [[1,1],[1,-1]].
inline HadamardMatrix sylvester(int m) {
  require(m >= 0 && m <= 20, Errc::invalid_params, "sylvester exponent out of range");
  int n = 1 << m;
  HadamardMatrix h;
  h.order = n;
  h.entries.assign(static_cast<size_t>(n) * n, 1);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      // sign = (-1)^{popcount(r & c)}
      int bits = __builtin_popcount(static_cast<unsigned>(r & c));
      h.set(r, c, (bits & 1) ? -1 : 1);
    }
  return h;
}

namespace detail {

inline bool is_prime(int p) {
  if (p < 2) return false;
  for (int d = 2; static_cast<std::int64_t>(d) * d <= p; ++d)
    if (p % d == 0) return false;
  return true;
}

}  // namespace detail

// Paley construction I: order p+1 for prime p with p % 4 == 3. Built from the
// quadratic-residue character chi on GF(p): H = I + S with S skew, S's core the
// Jacobsthal matrix Q(i,j) = chi(j - i).
inline HadamardMatrix paley_one(int p) {
  require(detail::is_prime(p) && p % 4 == 3, Errc::not_constructible,
          "paley_one needs a prime p with p % 4 == 3, got p=" + std::to_string(p));
  std::vector<int> chi(p, -1);
  chi[0] = 0;
  for (int x = 1; x < p; ++x) chi[static_cast<int>((static_cast<std::int64_t>(x) * x) % p)] = 1;
  int n = p + 1;
  HadamardMatrix h;
  h.order = n;
  h.entries.assign(static_cast<size_t>(n) * n, 1);
  for (int j = 1; j < n; ++j) h.set(j, 0, -1);
  h.set(0, 0, 1);
  for (int i = 1; i < n; ++i)
    for (int j = 1; j < n; ++j) {
      if (i == j) {
        h.set(i, j, 1);
      } else {
        int d = ((j - i) % p + p) % p;
        h.set(i, j, chi[d]);
      }
    }
  normalize(h);
  return h;
}

inline HadamardMatrix kronecker(const HadamardMatrix& a, const HadamardMatrix& b) {
  HadamardMatrix h;
  h.order = a.order * b.order;
  h.entries.assign(static_cast<size_t>(h.order) * h.order, 1);
  for (int r1 = 0; r1 < a.order; ++r1)
    for (int r2 = 0; r2 < b.order; ++r2)
      for (int c1 = 0; c1 < a.order; ++c1)
        for (int c2 = 0; c2 < b.order; ++c2)
          h.set(r1 * b.order + r2, c1 * b.order + c2, a.at(r1, c1) * b.at(r2, c2));
  normalize(h);
  return h;
}

// Orders reachable from {1, 2, powers of two, Paley p+1} closed under products.
inline bool constructible_order(int n) {
  if (n == 1 || n == 2) return true;
  if (n < 4 || n % 4 != 0) return false;
  if ((n & (n - 1)) == 0) return true;
  if (detail::is_prime(n - 1) && (n - 1) % 4 == 3) return true;
  for (int d = 2; d * d <= n; ++d)
    if (n % d == 0 && constructible_order(d) && constructible_order(n / d)) return true;
  return false;
}

inline HadamardMatrix build_order(int n) {
  require(constructible_order(n), Errc::not_constructible,
          "no Sylvester/Paley/Kronecker construction for order " + std::to_string(n));
  if ((n & (n - 1)) == 0) {
    int m = 0;
    while ((1 << m) < n) ++m;
    return sylvester(m);
  }
  if (detail::is_prime(n - 1) && (n - 1) % 4 == 3) return paley_one(n - 1);
  for (int d = 2; d * d <= n; ++d)
    if (n % d == 0 && constructible_order(d) && constructible_order(n / d))
      return kronecker(build_order(d), build_order(n / d));
  fail(Errc::not_constructible, "unreachable");
}

// Smallest constructible order 2q = 2k * c with c in 1..64. This is the block
// width used by the group estimator; q is always a multiple of k.
inline std::pair<int, HadamardMatrix> smallest_order(int k) {
  require(k >= 1, Errc::invalid_params, "k must be >= 1");
  for (int c = 1; c <= 64; ++c) {
    int n = 2 * k * c;
    if (constructible_order(n)) return {n, build_order(n)};
  }
  fail(Errc::no_order_found, "no constructible order 2k*c with c <= 64 for k=" + std::to_string(k));
}

// Column split of one row into the negative-side and positive-side index sets.
// Row 0 (all +1) splits by position: first half negative, second half positive.
// Other rows split by entry sign.
struct RowPartition {
  int row = 0;
  std::vector<int> minus_cols;
  std::vector<int> plus_cols;
};

inline std::vector<RowPartition> row_partitions(const HadamardMatrix& h) {
  int n = h.order;
  std::vector<RowPartition> parts(n);
  for (int r = 0; r < n; ++r) {
    parts[r].row = r;
    for (int c = 0; c < n; ++c) {
      bool plus = (r == 0) ? (c >= n / 2) : (h.at(r, c) > 0);
      (plus ? parts[r].plus_cols : parts[r].minus_cols).push_back(c);
    }
  }
  return parts;
}

// Chunk each side of a partition into contiguous groups of exactly k columns.
inline std::pair<std::vector<std::vector<int>>, std::vector<std::vector<int>>> split_into_k_groups(
    const RowPartition& part, int k) {
  size_t half = part.minus_cols.size();
  require(part.plus_cols.size() == half, Errc::invalid_grouping, "unbalanced partition");
  require(k >= 1 && half % static_cast<size_t>(k) == 0, Errc::invalid_grouping,
          "k must divide half the order, got half=" + std::to_string(half) + " k=" + std::to_string(k));
  auto chunk = [&](const std::vector<int>& cols) {
    std::vector<std::vector<int>> groups;
    for (size_t i = 0; i < cols.size(); i += k)
      groups.emplace_back(cols.begin() + i, cols.begin() + i + k);
    return groups;
  };
  return {chunk(part.minus_cols), chunk(part.plus_cols)};
}

inline std::string format_rows(const HadamardMatrix& h) {
  std::string out;
  out.reserve(static_cast<size_t>(h.order) * (h.order + 1));
  for (int r = 0; r < h.order; ++r) {
    for (int c = 0; c < h.order; ++c) out.push_back(h.at(r, c) > 0 ? '+' : '-');
    out.push_back('\n');
  }
  return out;
}

}  // namespace csar
