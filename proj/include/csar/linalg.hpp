#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <span>
#include <vector>

#include "csar/errors.hpp"

namespace csar {

struct DenseMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;  // row-major

  DenseMatrix() = default;
  DenseMatrix(int r, int c, double fill = 0.0) : rows(r), cols(c), data(static_cast<size_t>(r) * c, fill) {}

  double& operator()(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

  static DenseMatrix identity(int n) {
    DenseMatrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
};

inline DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b) {
  require(a.cols == b.rows, Errc::invalid_params, "matrix dimension mismatch");
  DenseMatrix out(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i)
    for (int l = 0; l < a.cols; ++l) {
      double v = a(i, l);
      if (v == 0.0) continue;
      for (int j = 0; j < b.cols; ++j) out(i, j) += v * b(l, j);
    }
  return out;
}

inline DenseMatrix transpose(const DenseMatrix& a) {
  DenseMatrix out(a.cols, a.rows);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < a.cols; ++j) out(j, i) = a(i, j);
  return out;
}

namespace detail {

constexpr double kPivotTol = 1e-12;

// In-place LU with partial pivoting; perm holds the row order.
inline void lu_factor(DenseMatrix& m, std::vector<int>& perm) {
  int n = m.rows;
  require(m.cols == n, Errc::invalid_params, "lu_factor needs a square matrix");
  perm.resize(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  for (int col = 0; col < n; ++col) {
    int best = col;
    double best_abs = std::abs(m(perm[col], col));
    for (int r = col + 1; r < n; ++r) {
      double v = std::abs(m(perm[r], col));
      if (v > best_abs) {
        best_abs = v;
        best = r;
      }
    }
    if (best_abs < kPivotTol) fail(Errc::singular, "pivot below tolerance");
    std::swap(perm[col], perm[best]);
    double pivot = m(perm[col], col);
    for (int r = col + 1; r < n; ++r) {
      double f = m(perm[r], col) / pivot;
      m(perm[r], col) = f;
      if (f == 0.0) continue;
      for (int c = col + 1; c < n; ++c) m(perm[r], c) -= f * m(perm[col], c);
    }
  }
}

inline std::vector<double> lu_solve(const DenseMatrix& lu, const std::vector<int>& perm,
                                    std::span<const double> z) {
  int n = lu.rows;
  std::vector<double> y(n);
  for (int i = 0; i < n; ++i) {
    double v = z[perm[i]];
    for (int j = 0; j < i; ++j) v -= lu(perm[i], j) * y[j];
    y[i] = v;
  }
  std::vector<double> x(n);
  for (int i = n - 1; i >= 0; --i) {
    double v = y[i];
    for (int j = i + 1; j < n; ++j) v -= lu(perm[i], j) * x[j];
    x[i] = v / lu(perm[i], i);
  }
  return x;
}

}  // namespace detail

// Gaussian elimination with partial pivoting + residual check.
inline std::vector<double> solve(const DenseMatrix& m, std::span<const double> z) {
  require(m.rows == m.cols, Errc::invalid_params, "solve needs a square matrix");
  require(static_cast<int>(z.size()) == m.rows, Errc::invalid_params, "rhs size mismatch");
  DenseMatrix lu = m;
  std::vector<int> perm;
  detail::lu_factor(lu, perm);
  std::vector<double> x = detail::lu_solve(lu, perm, z);
  double zmax = 0.0, rmax = 0.0;
  for (int i = 0; i < m.rows; ++i) {
    double r = -z[i];
    for (int j = 0; j < m.cols; ++j) r += m(i, j) * x[j];
    rmax = std::max(rmax, std::abs(r));
    zmax = std::max(zmax, std::abs(z[i]));
  }
  require(rmax <= 1e-8 * (1.0 + zmax), Errc::singular, "residual check failed after solve");
  return x;
}

inline DenseMatrix inverse(const DenseMatrix& m) {
  require(m.rows == m.cols, Errc::invalid_params, "inverse needs a square matrix");
  int n = m.rows;
  DenseMatrix lu = m;
  std::vector<int> perm;
  detail::lu_factor(lu, perm);
  DenseMatrix out(n, n);
  std::vector<double> e(n, 0.0);
  for (int c = 0; c < n; ++c) {
    e[c] = 1.0;
    std::vector<double> x = detail::lu_solve(lu, perm, e);
    for (int r = 0; r < n; ++r) out(r, c) = x[r];
    e[c] = 0.0;
  }
  return out;
}

inline double frobenius_norm(const DenseMatrix& m) {
  double s = 0.0;
  for (double v : m.data) s += v * v;
  return std::sqrt(s);
}

// Cyclic Jacobi on a symmetric matrix; ascending eigenvalues.
inline std::vector<double> sym_eigenvalues(const DenseMatrix& a_in) {
  int n = a_in.rows;
  require(a_in.cols == n, Errc::invalid_params, "sym_eigenvalues needs a square matrix");
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      require(std::abs(a_in(i, j) - a_in(j, i)) <= 1e-10, Errc::not_symmetric,
              "matrix is not symmetric within 1e-10");
  DenseMatrix a = a_in;
  double norm = frobenius_norm(a);
  if (norm == 0.0) return std::vector<double>(n, 0.0);
  auto off_norm = [&]() {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
  };
  for (int sweep = 0; sweep < 100 && off_norm() > 1e-12 * norm; ++sweep) {
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        double apq = a(p, q);
        if (apq == 0.0) continue;
        double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (int i = 0; i < n; ++i) {
          double aip = a(i, p), aiq = a(i, q);
          a(i, p) = c * aip - s * aiq;
          a(i, q) = s * aip + c * aiq;
        }
        for (int i = 0; i < n; ++i) {
          double api = a(p, i), aqi = a(q, i);
          a(p, i) = c * api - s * aqi;
          a(q, i) = s * api + c * aqi;
        }
      }
    }
  }
  std::vector<double> eig(n);
  for (int i = 0; i < n; ++i) eig[i] = a(i, i);
  std::sort(eig.begin(), eig.end());
  return eig;
}

// Ascending singular values via eigenvalues of M^T M.
inline std::vector<double> singular_values(const DenseMatrix& m) {
  DenseMatrix mtm = multiply(transpose(m), m);
  std::vector<double> eig = sym_eigenvalues(mtm);
  for (double& v : eig) v = std::sqrt(std::max(0.0, v));
  return eig;
}

inline double condition_number(const DenseMatrix& m) {
  std::vector<double> sv = singular_values(m);
  double smax = sv.back(), smin = sv.front();
  require(smin > 1e-12 * smax, Errc::singular, "condition number is numerically infinite");
  return smax / smin;
}

inline double mse(std::span<const double> estimate, std::span<const double> truth) {
  require(estimate.size() == truth.size() && !estimate.empty(), Errc::invalid_params,
          "mse needs two equal-length nonempty vectors");
  double s = 0.0;
  for (size_t i = 0; i < estimate.size(); ++i) {
    double d = estimate[i] - truth[i];
    s += d * d;
  }
  return s / static_cast<double>(estimate.size());
}

namespace detail {
inline std::vector<double> average_ranks(std::span<const double> xs) {
  size_t n = xs.size();
  std::vector<size_t> idx(n);
  std::iota(idx.begin(), idx.end(), size_t{0});
  std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(n);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && xs[idx[j + 1]] == xs[idx[i]]) ++j;
    double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
    for (size_t t = i; t <= j; ++t) ranks[idx[t]] = avg;
    i = j + 1;
  }
  return ranks;
}
}  // namespace detail

// Spearman rank correlation; ties get average ranks. If either side has zero
// rank variance the correlation is reported as 0 (all-ties convention).
inline double spearman(std::span<const double> xs, std::span<const double> ys) {
  require(xs.size() == ys.size() && xs.size() >= 2, Errc::invalid_params,
          "spearman needs two equal-length vectors of size >= 2");
  std::vector<double> rx = detail::average_ranks(xs);
  std::vector<double> ry = detail::average_ranks(ys);
  double n = static_cast<double>(xs.size());
  double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    double dx = rx[i] - mx, dy = ry[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace csar
