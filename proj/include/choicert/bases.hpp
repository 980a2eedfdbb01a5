#pragma once

// Orthogonal Hermitian operator bases and real coordinate expansions.
//
// Coordinates follow the unit-trace convention: for a factor of dimension d
// with elements S_0 = alpha * I, S_1, ..., the coordinate of a matrix rho is
//
//   x_0 = tr(rho S_0) / alpha,      x_mu = d * tr(rho S_mu) / tr(S_mu^2),
//
// so a unit-trace rho has x_0 = 1 and rho = sum_mu x_mu S_mu / (scale_mu tr(S_mu^2)).
// For Pauli matrices x is the Bloch vector; for Gell-Mann matrices
// x_i = (3/2) tr(rho lambda_i).
// Multi-factor coordinates are products of the per-factor scales.

#include "choicert/matops.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace choicert {

enum class BasisKind { Pauli, PauliPlanar, GellMann, CanonicalHermitian };

inline std::string to_string(BasisKind k) {
  switch (k) {
    case BasisKind::Pauli: return "pauli";
    case BasisKind::PauliPlanar: return "pauli_planar";
    case BasisKind::GellMann: return "gellmann";
    case BasisKind::CanonicalHermitian: return "canonical_hermitian";
  }
  return "?";
}

inline BasisKind basis_kind_from_string(const std::string& s) {
  if (s == "pauli") return BasisKind::Pauli;
  if (s == "pauli_planar") return BasisKind::PauliPlanar;
  if (s == "gellmann") return BasisKind::GellMann;
  if (s == "canonical_hermitian") return BasisKind::CanonicalHermitian;
  throw Error("unknown basis kind '" + s + "'");
}

/// Orthogonal Hermitian operators on one factor, element 0 proportional to I.
struct OperatorBasis {
  BasisKind kind;
  int dim;
  std::vector<CMatrix> elements;
  /// Coordinate extraction factor: x_mu = scales[mu] * tr(rho S_mu).
  std::vector<double> scales;
  /// tr(S_mu S_mu), cached for reconstruction.
  std::vector<double> norms;

  int size() const { return static_cast<int>(elements.size()); }
  /// Number of coordinate variables (all elements except the identity).
  int num_vars() const { return size() - 1; }
};

namespace detail {

// Generalized Gell-Mann matrices ordered so that d=2 gives (x, y, z) and
// d=3 gives lambda_1..lambda_8: for k = 1..d-1, the symmetric and
// antisymmetric pairs (j, k) with j < k, then the k-th diagonal element.
inline std::vector<CMatrix> gell_mann_family(int d) {
  std::vector<CMatrix> out;
  const Complex I(0, 1);
  for (int k = 1; k < d; ++k) {
    for (int j = 0; j < k; ++j) {
      CMatrix s = CMatrix::Zero(d, d);
      s(j, k) = 1;
      s(k, j) = 1;
      out.push_back(s);
      CMatrix a = CMatrix::Zero(d, d);
      a(j, k) = -I;
      a(k, j) = I;
      out.push_back(a);
    }
    CMatrix diag = CMatrix::Zero(d, d);
    const double c = std::sqrt(2.0 / (k * (k + 1.0)));
    for (int j = 0; j < k; ++j) diag(j, j) = c;
    diag(k, k) = -c * k;
    out.push_back(diag);
  }
  return out;
}

inline OperatorBasis finish_basis(BasisKind kind, int dim, double alpha, std::vector<CMatrix> traceless) {
  OperatorBasis b{kind, dim, {}, {}, {}};
  b.elements.push_back(alpha * CMatrix::Identity(dim, dim));
  for (auto& m : traceless) b.elements.push_back(std::move(m));
  for (const auto& s : b.elements) b.norms.push_back((s * s).trace().real());
  b.scales.push_back(1.0 / alpha);
  for (std::size_t mu = 1; mu < b.elements.size(); ++mu) b.scales.push_back(dim / b.norms[mu]);
  return b;
}

}  // namespace detail

inline OperatorBasis make_basis(BasisKind kind, int dim) {
  switch (kind) {
    case BasisKind::Pauli:
      if (dim != 2) throw Error("pauli basis requires dimension 2");
      return detail::finish_basis(kind, 2, 1.0, detail::gell_mann_family(2));
    case BasisKind::PauliPlanar: {
      if (dim != 2) throw Error("pauli_planar basis requires dimension 2");
      auto f = detail::gell_mann_family(2);
      return detail::finish_basis(kind, 2, 1.0, {f[0], f[2]});
    }
    case BasisKind::GellMann:
      if (dim != 3) throw Error("gellmann basis requires dimension 3");
      return detail::finish_basis(kind, 3, std::sqrt(2.0 / 3.0), detail::gell_mann_family(3));
    case BasisKind::CanonicalHermitian:
      if (dim < 1) throw Error("canonical_hermitian basis requires a positive dimension");
      return detail::finish_basis(kind, dim, 1.0, detail::gell_mann_family(dim));
  }
  throw Error("unknown basis kind");
}

inline OperatorBasis make_basis(const std::string& kind, int dim) {
  return make_basis(basis_kind_from_string(kind), dim);
}

/// Default basis for a factor of the given dimension.
inline OperatorBasis default_basis(int dim) {
  if (dim == 2) return make_basis(BasisKind::Pauli, 2);
  if (dim == 3) return make_basis(BasisKind::GellMann, 3);
  return make_basis(BasisKind::CanonicalHermitian, dim);
}

/// Real coordinates X_{mu_1 ... mu_p}, flattened row-major (last factor fastest).
struct CoordinateTensor {
  std::vector<int> dims;
  std::vector<double> values;

  std::size_t flat(const std::vector<int>& mu) const { return detail::flatten(mu, dims); }
  double operator()(const std::vector<int>& mu) const { return values.at(flat(mu)); }
};

namespace detail {

inline int basis_product_dim(const std::vector<OperatorBasis>& factors) {
  int d = 1;
  for (const auto& b : factors) d *= b.dim;
  return d;
}

inline std::vector<int> basis_sizes(const std::vector<OperatorBasis>& factors) {
  std::vector<int> s;
  for (const auto& b : factors) s.push_back(b.size());
  return s;
}

// Applies fn(mu, element, scale, norm) to every product basis element.
template <typename Fn>
void for_each_product_element(const std::vector<OperatorBasis>& factors, Fn&& fn) {
  const std::vector<int> sizes = basis_sizes(factors);
  int total = 1;
  for (int s : sizes) total *= s;
  std::vector<int> mu;
  std::vector<CMatrix> parts(factors.size());
  for (int flat_index = 0; flat_index < total; ++flat_index) {
    unflatten(flat_index, sizes, mu);
    double scale = 1, norm = 1;
    for (std::size_t f = 0; f < factors.size(); ++f) {
      parts[f] = factors[f].elements[mu[f]];
      scale *= factors[f].scales[mu[f]];
      norm *= factors[f].norms[mu[f]];
    }
    fn(flat_index, tensor_product(parts), scale, norm);
  }
}

// tr(a b) for square matrices of equal size
inline Complex trace_of_product(const CMatrix& a, const CMatrix& b) {
  return (a.array() * b.transpose().array()).sum();
}

}  // namespace detail

inline CoordinateTensor expand(const HermitianMatrix& rho, const std::vector<OperatorBasis>& factors) {
  if (detail::basis_product_dim(factors) != rho.dim()) {
    throw DimensionError("expand: basis dimensions do not multiply to the matrix dimension");
  }
  CoordinateTensor x{detail::basis_sizes(factors), {}};
  int total = 1;
  for (int s : x.dims) total *= s;
  x.values.assign(total, 0.0);
  detail::for_each_product_element(factors, [&](int flat, const CMatrix& s, double scale, double) {
    x.values[flat] = scale * detail::trace_of_product(rho.matrix(), s).real();
  });
  return x;
}

/// Inverse of expand on the span of the basis.
inline HermitianMatrix reconstruct(const CoordinateTensor& x, const std::vector<OperatorBasis>& factors) {
  if (x.dims != detail::basis_sizes(factors)) throw DimensionError("reconstruct: coordinate shape mismatch");
  const int d = detail::basis_product_dim(factors);
  CMatrix rho = CMatrix::Zero(d, d);
  detail::for_each_product_element(factors, [&](int flat, const CMatrix& s, double scale, double norm) {
    if (x.values[flat] != 0.0) rho += (x.values[flat] / (scale * norm)) * s;
  });
  return assume_hermitian(std::move(rho));
}

/// Local matrix for one factor with coordinates x_1..x_k (x_0 = 1 implied).
inline HermitianMatrix local_state(const OperatorBasis& b, const std::vector<double>& x) {
  if (static_cast<int>(x.size()) != b.num_vars()) throw DimensionError("local_state: wrong coordinate count");
  CoordinateTensor c{{b.size()}, {}};
  c.values.push_back(1.0);
  c.values.insert(c.values.end(), x.begin(), x.end());
  return reconstruct(c, {b});
}

}  // namespace choicert
