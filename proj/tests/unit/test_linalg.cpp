#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "csar/errors.hpp"
#include "csar/hadamard.hpp"
#include "csar/linalg.hpp"

using namespace csar;

namespace {

DenseMatrix from_rows(const std::vector<std::vector<double>>& rows) {
  DenseMatrix m(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
  for (int r = 0; r < m.rows; ++r)
    for (int c = 0; c < m.cols; ++c) m(r, c) = rows[r][c];
  return m;
}

}  // namespace

TEST_CASE("solve recovers a hand-checked 2x2 system") {
  DenseMatrix a = from_rows({{2, 1}, {1, 3}});
  std::vector<double> z = {5, 10};
  auto x = solve(a, z);
  REQUIRE(x.size() == 2);
  CHECK_THAT(x[0], Catch::Matchers::WithinAbs(1.0, 1e-12));
  CHECK_THAT(x[1], Catch::Matchers::WithinAbs(3.0, 1e-12));
}

TEST_CASE("solve round-trips random well-conditioned systems") {
  std::mt19937_64 eng(7);
  std::normal_distribution<double> norm(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    int n = 3 + static_cast<int>(eng() % 6);
    DenseMatrix a(n, n);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) a(r, c) = norm(eng) + (r == c ? 4.0 * n : 0.0);
    std::vector<double> x_true(n);
    for (auto& v : x_true) v = norm(eng);
    std::vector<double> z(n, 0.0);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) z[r] += a(r, c) * x_true[c];
    auto x = solve(a, z);
    for (int i = 0; i < n; ++i) CHECK_THAT(x[i], Catch::Matchers::WithinAbs(x_true[i], 1e-8));
  }
}

TEST_CASE("solve rejects a singular matrix") {
  DenseMatrix a = from_rows({{1, 1}, {1, 1}});
  std::vector<double> z = {1, 2};
  try {
    solve(a, z);
    FAIL("expected singular error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::singular);
  }
}

TEST_CASE("inverse times original is the identity") {
  DenseMatrix a = from_rows({{4, 1, 0}, {1, 3, -1}, {0, -1, 5}});
  DenseMatrix inv = inverse(a);
  DenseMatrix prod = multiply(inv, a);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c)
      CHECK_THAT(prod(r, c), Catch::Matchers::WithinAbs(r == c ? 1.0 : 0.0, 1e-10));
}

TEST_CASE("symmetric eigenvalues match hand-computed spectra") {
  auto eig1 = sym_eigenvalues(from_rows({{2, 1}, {1, 2}}));
  REQUIRE(eig1.size() == 2);
  CHECK_THAT(eig1[0], Catch::Matchers::WithinAbs(1.0, 1e-10));
  CHECK_THAT(eig1[1], Catch::Matchers::WithinAbs(3.0, 1e-10));

  auto eig2 = sym_eigenvalues(from_rows({{0, 1}, {1, 0}}));
  CHECK_THAT(eig2[0], Catch::Matchers::WithinAbs(-1.0, 1e-10));
  CHECK_THAT(eig2[1], Catch::Matchers::WithinAbs(1.0, 1e-10));

  // Diagonal matrix: spectrum is the sorted diagonal.
  auto eig3 = sym_eigenvalues(from_rows({{5, 0, 0}, {0, -2, 0}, {0, 0, 1}}));
  CHECK_THAT(eig3[0], Catch::Matchers::WithinAbs(-2.0, 1e-12));
  CHECK_THAT(eig3[1], Catch::Matchers::WithinAbs(1.0, 1e-12));
  CHECK_THAT(eig3[2], Catch::Matchers::WithinAbs(5.0, 1e-12));
}

TEST_CASE("symmetric eigensolver rejects a non-symmetric input") {
  try {
    sym_eigenvalues(from_rows({{1, 2}, {0, 1}}));
    FAIL("expected not_symmetric");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::not_symmetric);
  }
}

TEST_CASE("singular values and condition number of a diagonal matrix") {
  DenseMatrix a = from_rows({{3, 0}, {0, -4}});
  auto sv = singular_values(a);
  REQUIRE(sv.size() == 2);
  CHECK_THAT(sv[0], Catch::Matchers::WithinAbs(3.0, 1e-10));
  CHECK_THAT(sv[1], Catch::Matchers::WithinAbs(4.0, 1e-10));
  CHECK_THAT(condition_number(a), Catch::Matchers::WithinAbs(4.0 / 3.0, 1e-10));
}

TEST_CASE("every constructible sign design has unit condition number") {
  for (int n : {1, 2, 4, 8, 12, 16, 20, 24, 32}) {
    HadamardMatrix h = build_order(n);
    DenseMatrix d(n, n);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) d(r, c) = h.at(r, c);
    CHECK_THAT(condition_number(d), Catch::Matchers::WithinAbs(1.0, 1e-8));
  }
}

TEST_CASE("condition number of a singular matrix errors out") {
  DenseMatrix a = from_rows({{1, 2}, {2, 4}});
  try {
    condition_number(a);
    FAIL("expected singular error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::singular);
  }
}

TEST_CASE("mse is the mean squared componentwise error") {
  std::vector<double> est = {1, 2};
  std::vector<double> truth = {0, 0};
  CHECK_THAT(mse(est, truth), Catch::Matchers::WithinAbs(2.5, 1e-12));
  CHECK_THAT(mse(truth, truth), Catch::Matchers::WithinAbs(0.0, 1e-15));
}

TEST_CASE("spearman handles monotone, reversed, and tied data") {
  std::vector<double> x = {1, 2, 3, 4, 5};
  std::vector<double> up = {10, 20, 25, 40, 100};
  std::vector<double> down = {5, 4, 3, 2, 1};
  CHECK_THAT(spearman(x, up), Catch::Matchers::WithinAbs(1.0, 1e-12));
  CHECK_THAT(spearman(x, down), Catch::Matchers::WithinAbs(-1.0, 1e-12));

  // One tied pair in x: ranks {1, 2.5, 2.5, 4} against {1,2,3,4} gives
  // sqrt(0.9) by direct Pearson-on-ranks arithmetic.
  std::vector<double> xt = {1, 2, 2, 3};
  std::vector<double> yt = {10, 20, 30, 40};
  CHECK_THAT(spearman(xt, yt), Catch::Matchers::WithinAbs(std::sqrt(0.9), 1e-12));

  // Constant input has no ranking information.
  std::vector<double> flat = {3, 3, 3, 3};
  CHECK_THAT(spearman(flat, yt), Catch::Matchers::WithinAbs(0.0, 1e-12));
}

TEST_CASE("average ranks split ties evenly") {
  std::vector<double> v = {7, 1, 7, 3};
  auto r = detail::average_ranks(v);
  REQUIRE(r.size() == 4);
  CHECK_THAT(r[0], Catch::Matchers::WithinAbs(3.5, 1e-12));
  CHECK_THAT(r[1], Catch::Matchers::WithinAbs(1.0, 1e-12));
  CHECK_THAT(r[2], Catch::Matchers::WithinAbs(3.5, 1e-12));
  CHECK_THAT(r[3], Catch::Matchers::WithinAbs(2.0, 1e-12));
}

TEST_CASE("frobenius norm of a known matrix") {
  DenseMatrix a = from_rows({{3, 4}, {0, 0}});
  CHECK_THAT(frobenius_norm(a), Catch::Matchers::WithinAbs(5.0, 1e-12));
}
