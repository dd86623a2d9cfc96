#pragma once

// Compressed sparse row storage and Jacobi-preconditioned Krylov solvers.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "rfrac/error.hpp"

namespace rfrac {

class CsrMatrix {
 public:
  CsrMatrix() = default;
  CsrMatrix(int n, std::vector<int> row_ptr, std::vector<int> cols, std::vector<double> vals)
      : n_(n), row_ptr_(std::move(row_ptr)), cols_(std::move(cols)), vals_(std::move(vals)) {}

  int size() const noexcept { return n_; }
  int nonzeros() const noexcept { return static_cast<int>(vals_.size()); }
  const std::vector<int>& row_ptr() const noexcept { return row_ptr_; }
  const std::vector<int>& cols() const noexcept { return cols_; }
  const std::vector<double>& values() const noexcept { return vals_; }

  double at(int r, int c) const noexcept {
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
      if (cols_[k] == c) return vals_[k];
    return 0.0;
  }

  std::vector<double> diagonal() const {
    std::vector<double> d(static_cast<std::size_t>(n_), 0.0);
    for (int r = 0; r < n_; ++r) d[r] = at(r, r);
    return d;
  }

  void multiply(std::span<const double> x, std::span<double> y) const noexcept {
    for (int r = 0; r < n_; ++r) {
      double acc = 0.0;
      for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) acc += vals_[k] * x[cols_[k]];
      y[r] = acc;
    }
  }

  std::vector<double> operator*(std::span<const double> x) const {
    std::vector<double> y(static_cast<std::size_t>(n_));
    multiply(x, y);
    return y;
  }

  /// Exact structural and numerical symmetry.
  bool is_symmetric() const noexcept {
    for (int r = 0; r < n_; ++r)
      for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
        if (at(cols_[k], r) != vals_[k]) return false;
    return true;
  }

 private:
  int n_ = 0;
  std::vector<int> row_ptr_, cols_;
  std::vector<double> vals_;
};

/// Accumulates (row, col, value) contributions; duplicates are summed in
/// insertion order so the assembled values are reproducible.
class SparseBuilder {
 public:
  explicit SparseBuilder(int n) : n_(n) {}

  void add(int r, int c, double v) { entries_.push_back({r, c, v}); }

  /// Symmetric two-point coupling of unknowns a and b with conductance t.
  void add_conductance(int a, int b, double t) {
    add(a, a, t);
    add(a, b, -t);
    add(b, b, t);
    add(b, a, -t);
  }

  CsrMatrix build() const {
    std::vector<std::size_t> order(entries_.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [this](std::size_t a, std::size_t b) {
      return std::tie(entries_[a].r, entries_[a].c) < std::tie(entries_[b].r, entries_[b].c);
    });
    std::vector<int> row_ptr(static_cast<std::size_t>(n_) + 1, 0), cols;
    std::vector<double> vals;
    int last_r = -1, last_c = -1;
    for (std::size_t idx : order) {
      const auto& e = entries_[idx];
      if (e.r == last_r && e.c == last_c) {
        vals.back() += e.v;
        continue;
      }
      cols.push_back(e.c);
      vals.push_back(e.v);
      ++row_ptr[static_cast<std::size_t>(e.r) + 1];
      last_r = e.r;
      last_c = e.c;
    }
    for (int r = 0; r < n_; ++r) row_ptr[r + 1] += row_ptr[r];
    return CsrMatrix(n_, std::move(row_ptr), std::move(cols), std::move(vals));
  }

 private:
  struct Entry {
    int r, c;
    double v;
  };
  int n_;
  std::vector<Entry> entries_;
};

struct SolverOptions {
  double rel_tol = 1e-12;
  int max_iter = 10000;
};

struct SolveReport {
  int iterations = 0;
  double relative_residual = 0.0;
  std::vector<double> history;
};

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

inline double norm(std::span<const double> a) noexcept { return std::sqrt(dot(a, a)); }

inline std::vector<double> inverse_diagonal(const CsrMatrix& a) {
  auto d = a.diagonal();
  for (auto& v : d) v = v != 0.0 ? 1.0 / v : 1.0;
  return d;
}

inline double true_residual(const CsrMatrix& a, std::span<const double> b,
                            std::span<const double> x, std::vector<double>& r) {
  a.multiply(x, r);
  for (std::size_t k = 0; k < r.size(); ++k) r[k] = b[k] - r[k];
  return norm(r);
}

}  // namespace detail

/// Jacobi-preconditioned conjugate gradients for symmetric positive
/// (semi-)definite systems. `x` holds the initial guess on entry.
inline SolveReport pcg(const CsrMatrix& a, std::span<const double> b, std::span<double> x,
                       const SolverOptions& opt = {}) {
  const std::size_t n = b.size();
  SolveReport rep;
  const double bnorm = detail::norm(b);
  std::vector<double> r(n), z(n), p(n), q(n);
  double rnorm = detail::true_residual(a, b, x, r);
  const double scale = bnorm > 0.0 ? bnorm : 1.0;
  rep.history.push_back(rnorm / scale);
  if (rnorm <= opt.rel_tol * scale) {
    rep.relative_residual = rnorm / scale;
    return rep;
  }
  const auto dinv = detail::inverse_diagonal(a);
  for (std::size_t k = 0; k < n; ++k) z[k] = dinv[k] * r[k];
  p = z;
  double rz = detail::dot(r, z);
  for (int it = 1; it <= opt.max_iter; ++it) {
    a.multiply(p, q);
    const double pq = detail::dot(p, q);
    if (pq <= 0.0) break;
    const double alpha = rz / pq;
    for (std::size_t k = 0; k < n; ++k) {
      x[k] += alpha * p[k];
      r[k] -= alpha * q[k];
    }
    rnorm = detail::norm(r);
    rep.iterations = it;
    rep.history.push_back(rnorm / scale);
    if (rnorm <= opt.rel_tol * scale) {
      // guard against drift of the recursive residual
      rnorm = detail::true_residual(a, b, x, r);
      if (rnorm <= opt.rel_tol * scale) {
        rep.relative_residual = rnorm / scale;
        return rep;
      }
    }
    for (std::size_t k = 0; k < n; ++k) z[k] = dinv[k] * r[k];
    const double rz_next = detail::dot(r, z);
    const double beta = rz_next / rz;
    rz = rz_next;
    for (std::size_t k = 0; k < n; ++k) p[k] = z[k] + beta * p[k];
  }
  rnorm = detail::true_residual(a, b, x, r);
  rep.relative_residual = rnorm / scale;
  if (rep.relative_residual <= opt.rel_tol) return rep;
  throw SolverFailure("pcg did not converge: relative residual " +
                          std::to_string(rep.relative_residual) + " after " +
                          std::to_string(rep.iterations) + " iterations",
                      rep.history);
}

/// Jacobi-preconditioned BiCGSTAB for non-symmetric systems.
inline SolveReport bicgstab(const CsrMatrix& a, std::span<const double> b, std::span<double> x,
                            const SolverOptions& opt = {}) {
  const std::size_t n = b.size();
  SolveReport rep;
  const double bnorm = detail::norm(b);
  const double scale = bnorm > 0.0 ? bnorm : 1.0;
  const auto dinv = detail::inverse_diagonal(a);
  std::vector<double> r(n), rhat(n), p(n, 0.0), v(n, 0.0), s(n), t(n), y(n), zv(n);

  double rnorm = detail::true_residual(a, b, x, r);
  rep.history.push_back(rnorm / scale);
  int it = 0;
  // restart loop: a breakdown re-seeds the shadow residual
  for (int restart = 0; restart < 50 && it < opt.max_iter; ++restart) {
    if (rnorm <= opt.rel_tol * scale) break;
    rhat = r;
    double rho = 1.0, alpha = 1.0, omega = 1.0;
    std::fill(p.begin(), p.end(), 0.0);
    std::fill(v.begin(), v.end(), 0.0);
    bool breakdown = false;
    while (it < opt.max_iter) {
      ++it;
      const double rho_next = detail::dot(rhat, r);
      if (rho_next == 0.0 || omega == 0.0) {
        breakdown = true;
        break;
      }
      const double beta = (rho_next / rho) * (alpha / omega);
      rho = rho_next;
      for (std::size_t k = 0; k < n; ++k) p[k] = r[k] + beta * (p[k] - omega * v[k]);
      for (std::size_t k = 0; k < n; ++k) y[k] = dinv[k] * p[k];
      a.multiply(y, v);
      const double rv = detail::dot(rhat, v);
      if (rv == 0.0) {
        breakdown = true;
        break;
      }
      alpha = rho / rv;
      for (std::size_t k = 0; k < n; ++k) s[k] = r[k] - alpha * v[k];
      if (detail::norm(s) <= opt.rel_tol * scale) {
        for (std::size_t k = 0; k < n; ++k) x[k] += alpha * y[k];
        rnorm = detail::true_residual(a, b, x, r);
        rep.history.push_back(rnorm / scale);
        if (rnorm > opt.rel_tol * scale) breakdown = true;  // recurrence drifted: restart
        break;
      }
      for (std::size_t k = 0; k < n; ++k) zv[k] = dinv[k] * s[k];
      a.multiply(zv, t);
      const double tt = detail::dot(t, t);
      omega = tt > 0.0 ? detail::dot(t, s) / tt : 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        x[k] += alpha * y[k] + omega * zv[k];
        r[k] = s[k] - omega * t[k];
      }
      rnorm = detail::norm(r);
      rep.history.push_back(rnorm / scale);
      if (rnorm <= opt.rel_tol * scale) {
        rnorm = detail::true_residual(a, b, x, r);
        if (rnorm > opt.rel_tol * scale) breakdown = true;
        break;
      }
    }
    if (!breakdown) break;
    rnorm = detail::true_residual(a, b, x, r);
  }
  rnorm = detail::true_residual(a, b, x, r);
  rep.iterations = it;
  rep.relative_residual = rnorm / scale;
  if (rep.relative_residual <= opt.rel_tol) return rep;
  throw SolverFailure("bicgstab did not converge: relative residual " +
                          std::to_string(rep.relative_residual) + " after " +
                          std::to_string(it) + " iterations",
                      rep.history);
}

}  // namespace rfrac
