#pragma once

// Semialgebraic descriptions of the local state spaces: a Hermitian W is PSD
// iff every coefficient a_k of its characteristic polynomial
// det(z - W) = sum_k (-1)^{n-k} a_k z^k is non-negative (Descartes' rule of
// signs, all roots being real). The a_k follow from traces of powers of W by
// the Faddeev-LeVerrier recursion, which works verbatim on matrices whose
// entries are polynomials in the expansion coordinates.

#include "choicert/bases.hpp"
#include "choicert/polynomial.hpp"

#include <vector>

namespace choicert {

/// K = { x in R^n : g_j(x) >= 0 for all j }.
struct SemialgebraicSet {
  int n = 0;
  std::vector<RealPolynomial> polys;
  int d0 = 1;
};

/// max_j max(1, ceil(deg g_j / 2)).
inline int d0_of(const std::vector<RealPolynomial>& polys) {
  int d0 = 1;
  for (const auto& g : polys) d0 = std::max(d0, (g.degree() + 1) / 2);
  return d0;
}

inline int d0_of(const SemialgebraicSet& k) { return d0_of(k.polys); }

inline bool contains(const SemialgebraicSet& k, const std::vector<double>& x, double tol = 1e-10) {
  for (const auto& g : k.polys) {
    if (g.eval(x) < -tol) return false;
  }
  return true;
}

namespace detail {

template <typename T>
using SquareMatrix = std::vector<std::vector<T>>;

template <typename T>
SquareMatrix<T> mat_mul(const SquareMatrix<T>& a, const SquareMatrix<T>& b, const T& zero) {
  const std::size_t n = a.size();
  SquareMatrix<T> c(n, std::vector<T>(n, zero));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t j = 0; j < n; ++j) c[i][j] += a[i][k] * b[k][j];
  return c;
}

// tr(a b) without forming the product
template <typename T>
T trace_mul(const SquareMatrix<T>& a, const SquareMatrix<T>& b, const T& zero) {
  T s = zero;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t k = 0; k < a.size(); ++k) s += a[i][k] * b[k][i];
  return s;
}

// Faddeev-LeVerrier from the power traces p_k = tr(W^k), k = 1..n.
template <typename T, typename Scalar>
std::vector<T> leverrier(const std::vector<T>& p, const T& one, const T& zero) {
  const std::size_t n = p.size() - 1;
  std::vector<T> a(n + 1, zero);
  a[n] = one;
  for (std::size_t m = 1; m <= n; ++m) {
    T s = zero;
    for (std::size_t k = 1; k <= m; ++k) {
      T term = a[n - m + k] * p[k];
      if (k % 2 == 1) {
        s -= term;
      } else {
        s += term;
      }
    }
    a[n - m] = s * Scalar(-1.0 / static_cast<double>(m));
  }
  return a;
}

}  // namespace detail

/// Coefficients a_0..a_n of det(z - W) = sum_k (-1)^{n-k} a_k z^k for a
/// square matrix with numeric or polynomial entries. `one` and `zero` are
/// the multiplicative and additive identities of the entry type.
template <typename T, typename Scalar = T>
std::vector<T> charpoly_coeffs(const detail::SquareMatrix<T>& w, const T& one, const T& zero) {
  const std::size_t n = w.size();
  for (const auto& row : w) {
    if (row.size() != n) throw DimensionError("charpoly_coeffs: matrix is not square");
  }
  std::vector<T> p(n + 1, zero);
  if (n == 0) return {one};
  // Powers up to ceil(n/2) are formed explicitly; the remaining traces pair them up.
  std::vector<detail::SquareMatrix<T>> pow{{}, w};
  const std::size_t half = (n + 1) / 2;
  for (std::size_t k = 2; k <= half; ++k) pow.push_back(detail::mat_mul(pow[k - 1], w, zero));
  for (std::size_t k = 1; k <= n; ++k) {
    if (k <= half) {
      T s = zero;
      for (std::size_t r = 0; r < n; ++r) s += pow[k][r][r];
      p[k] = s;
    } else {
      p[k] = detail::trace_mul(pow[half], pow[k - half], zero);
    }
  }
  return detail::leverrier<T, Scalar>(p, one, zero);
}

/// Numeric overload; for Hermitian input the coefficients are real.
inline std::vector<double> charpoly_coeffs(const CMatrix& w) {
  if (w.rows() != w.cols()) throw DimensionError("charpoly_coeffs: matrix is not square");
  const Eigen::Index n = w.rows();
  std::vector<Complex> p(n + 1, 0.0);
  CMatrix pk = CMatrix::Identity(n, n);
  for (Eigen::Index k = 1; k <= n; ++k) {
    pk = pk * w;
    p[k] = pk.trace();
  }
  const auto a = detail::leverrier<Complex, Complex>(p, Complex(1), Complex(0));
  std::vector<double> out;
  for (const auto& c : a) out.push_back(c.real());
  return out;
}

inline std::vector<double> charpoly_coeffs(const RMatrix& w) { return charpoly_coeffs(CMatrix(w.cast<Complex>())); }

/// PSD test by the sign rule: all a_k >= -tol.
inline bool descartes_psd(const CMatrix& w, double tol = 1e-12) {
  for (double a : charpoly_coeffs(w)) {
    if (a < -tol) return false;
  }
  return true;
}

/// Product elements of `factors` except the identity, as polynomial variables.
inline int side_num_vars(const std::vector<OperatorBasis>& factors) {
  int total = 1;
  for (const auto& b : factors) total *= b.size();
  return total - 1;
}

/// The set of coordinates x for which D * rho(x) is PSD, with rho(x) the
/// unit-trace matrix reconstructed on the product basis of `factors` and D
/// its dimension. Emits a_{D-2}, ..., a_0 (a_D = 1 and a_{D-1} = D are
/// constant). Scaling by D makes the Bloch ball exactly 1 - |x|^2 >= 0.
inline SemialgebraicSet positivity_set(const std::vector<OperatorBasis>& factors) {
  if (factors.empty()) throw Error("positivity_set: no factors");
  for (const auto& b : factors) {
    for (const auto& s : b.elements) {
      if (detail::hermitian_defect(s) > 1e-12) throw Error("positivity_set: basis element is not Hermitian");
    }
  }
  const int dim = detail::basis_product_dim(factors);
  const int n = side_num_vars(factors);
  using CP = ComplexPolynomial;
  const CP zero(n);
  detail::SquareMatrix<CP> w(dim, std::vector<CP>(dim, zero));
  detail::for_each_product_element(factors, [&](int flat, const CMatrix& s, double scale, double norm) {
    const double c = dim / (scale * norm);
    for (int i = 0; i < dim; ++i) {
      for (int j = 0; j < dim; ++j) {
        if (s(i, j) == Complex(0)) continue;
        const Complex v = c * s(i, j);
        if (flat == 0) {
          w[i][j].add_term(MultiIndex(n, 0), v);
        } else {
          w[i][j].add_term(unit_index(n, flat - 1), v);
        }
      }
    }
  });
  const auto a = charpoly_coeffs<CP, Complex>(w, CP::constant(n, 1.0), zero);
  SemialgebraicSet k;
  k.n = n;
  for (int idx = dim - 2; idx >= 0; --idx) {
    RealPolynomial g = real_part(a[idx], 1e-9);
    g.prune(1e-13);
    if (g.is_zero()) throw Error("positivity_set: vanishing constraint polynomial");
    k.polys.push_back(std::move(g));
  }
  if (k.polys.empty()) throw Error("positivity_set: one-dimensional factor has no constraints");
  k.d0 = d0_of(k.polys);
  return k;
}

/// Cartesian product K_1 x K_2 x ... with variables concatenated.
inline SemialgebraicSet product_set(const std::vector<SemialgebraicSet>& sets) {
  SemialgebraicSet out;
  for (const auto& s : sets) out.n += s.n;
  int offset = 0;
  for (const auto& s : sets) {
    for (const auto& g : s.polys) out.polys.push_back(g.embed(out.n, offset));
    offset += s.n;
  }
  if (out.polys.empty()) throw Error("product_set: empty constraint list");
  out.d0 = d0_of(out.polys);
  return out;
}

}  // namespace choicert
