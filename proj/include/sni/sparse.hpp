#ifndef SNI_SPARSE_HPP
#define SNI_SPARSE_HPP

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "sni/core.hpp"

namespace sni {

/// Square sparse matrix in compressed-row layout. Column indices are sorted
/// within each row and unique.
template <typename Scalar = double>
class CsrMatrix {
 public:
  CsrMatrix() = default;

  /// Builds from (row, col, value) triplets; duplicates are summed.
  static CsrMatrix from_triplets(std::size_t n, std::vector<std::tuple<Index, Index, Scalar>> triplets) {
    std::sort(triplets.begin(), triplets.end(), [](const auto& a, const auto& b) {
      return std::tie(std::get<0>(a), std::get<1>(a)) < std::tie(std::get<0>(b), std::get<1>(b));
    });
    CsrMatrix m;
    m.n_ = n;
    m.row_ptr_.assign(n + 1, 0);
    for (std::size_t k = 0; k < triplets.size();) {
      const auto [r, c, v0] = triplets[k];
      Scalar v = v0;
      std::size_t j = k + 1;
      while (j < triplets.size() && std::get<0>(triplets[j]) == r && std::get<1>(triplets[j]) == c)
        v += std::get<2>(triplets[j++]);
      m.cols_.push_back(c);
      m.vals_.push_back(v);
      ++m.row_ptr_[r + 1];
      k = j;
    }
    for (std::size_t i = 0; i < n; ++i) m.row_ptr_[i + 1] += m.row_ptr_[i];
    return m;
  }

  static CsrMatrix identity(std::size_t n) {
    std::vector<std::tuple<Index, Index, Scalar>> t;
    for (Index i = 0; i < n; ++i) t.emplace_back(i, i, Scalar(1));
    return from_triplets(n, std::move(t));
  }

  std::size_t rows() const { return n_; }
  std::size_t nnz() const { return vals_.size(); }

  std::span<const Index> row_cols(Index r) const {
    return {cols_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
  }
  std::span<const Scalar> row_vals(Index r) const {
    return {vals_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
  }
  std::span<Scalar> row_vals(Index r) {
    return {vals_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
  }

  Scalar at(Index r, Index c) const {
    auto cols = row_cols(r);
    auto it = std::lower_bound(cols.begin(), cols.end(), c);
    if (it == cols.end() || *it != c) return Scalar(0);
    return row_vals(r)[static_cast<std::size_t>(it - cols.begin())];
  }

  Scalar diagonal(Index r) const { return at(r, r); }

  void multiply(std::span<const Scalar> x, std::span<Scalar> y) const {
    for (Index r = 0; r < n_; ++r) {
      Scalar s = 0;
      for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) s += vals_[k] * x[cols_[k]];
      y[r] = s;
    }
  }

  std::vector<Scalar> operator*(std::span<const Scalar> x) const {
    std::vector<Scalar> y(n_);
    multiply(x, y);
    return y;
  }

  Scalar max_abs() const {
    Scalar m = 0;
    for (Scalar v : vals_) m = std::max(m, std::abs(v));
    return m;
  }

  /// max |A_ij - A_ji| over the stored pattern.
  Scalar asymmetry() const {
    Scalar m = 0;
    for (Index r = 0; r < n_; ++r) {
      auto cols = row_cols(r);
      auto vals = row_vals(r);
      for (std::size_t k = 0; k < cols.size(); ++k) m = std::max(m, std::abs(vals[k] - at(cols[k], r)));
    }
    return m;
  }

 private:
  std::size_t n_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<Index> cols_;
  std::vector<Scalar> vals_;
};

struct CgResult {
  Field x;
  std::size_t iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

/// Jacobi-preconditioned conjugate gradients. Returns the iterate whether or
/// not it converged; use solve_cg for the throwing contract.
template <typename Scalar>
CgResult cg_iterate(const CsrMatrix<Scalar>& a, std::span<const double> b, double tol,
                    std::size_t max_iter, std::span<const double> x0 = {}) {
  const std::size_t n = a.rows();
  CgResult out;
  out.x.assign(n, 0.0);
  if (x0.size() == n) std::copy(x0.begin(), x0.end(), out.x.begin());

  const double bnorm = norm2(b);
  if (bnorm == 0.0 && x0.empty()) {
    out.converged = true;
    return out;
  }
  const double target = tol * (bnorm > 0.0 ? bnorm : 1.0);

  Field r(n), z(n), p(n), q(n), inv_diag(n);
  for (Index i = 0; i < n; ++i) {
    const double d = a.diagonal(i);
    inv_diag[i] = d != 0.0 ? 1.0 / d : 1.0;
  }
  a.multiply(out.x, q);
  for (Index i = 0; i < n; ++i) r[i] = b[i] - q[i];
  double rnorm = norm2(r);
  for (Index i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
  p = z;
  double rz = dot(r, z);

  std::size_t it = 0;
  // Restart from the current iterate when the recursively updated residual
  // has drifted from the true one.
  for (int restart = 0; restart < 4; ++restart) {
    while (rnorm > target && it < max_iter) {
      a.multiply(p, q);
      const double pq = dot(p, q);
      if (!(pq > 0.0)) break;
      const double alpha = rz / pq;
      for (Index i = 0; i < n; ++i) {
        out.x[i] += alpha * p[i];
        r[i] -= alpha * q[i];
      }
      rnorm = norm2(r);
      ++it;
      for (Index i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
      const double rz_new = dot(r, z);
      const double beta = rz_new / rz;
      rz = rz_new;
      for (Index i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    a.multiply(out.x, q);
    for (Index i = 0; i < n; ++i) r[i] = b[i] - q[i];
    rnorm = norm2(r);
    if (rnorm <= target || it >= max_iter) break;
    for (Index i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    p = z;
    rz = dot(r, z);
  }
  out.iterations = it;
  out.relative_residual = rnorm / (bnorm > 0.0 ? bnorm : 1.0);
  out.converged = rnorm <= target;
  return out;
}

}  // namespace sni

#endif  // SNI_SPARSE_HPP
