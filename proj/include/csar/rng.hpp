#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

namespace csar {

// SplitMix64 finalizer; good avalanche, cheap, and stable across platforms.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Deterministic stream-splitting key. One master seed; every consumer derives a
// child key along a documented path, e.g. for estimator pulls the path is
// (replication, phase, block, row, sign). Streams are then independent of
// evaluation order and worker count.
class RngKey {
 public:
  explicit RngKey(std::uint64_t seed) : state_(mix64(seed)) {}

  RngKey child(std::uint64_t id) const { return RngKey(FromState{}, mix64(state_ ^ mix64(id + 1))); }

  std::uint64_t value() const { return state_; }

  std::mt19937_64 engine() const { return std::mt19937_64(state_); }

 private:
  struct FromState {};
  RngKey(FromState, std::uint64_t raw) : state_(raw) {}
  std::uint64_t state_;
};

// k distinct indices from [0, n), ascending. Partial Fisher-Yates on an index
// pool; self-contained so results do not depend on the stdlib's shuffle.
inline std::vector<int> random_k_subset(int n, int k, std::mt19937_64& eng) {
  std::vector<int> pool(n);
  for (int i = 0; i < n; ++i) pool[i] = i;
  std::vector<int> out(k);
  for (int i = 0; i < k; ++i) {
    std::uniform_int_distribution<int> dist(i, n - 1);
    int j = dist(eng);
    std::swap(pool[i], pool[j]);
    out[i] = pool[i];
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace csar
