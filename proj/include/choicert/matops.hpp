#pragma once

// Dense complex linear algebra on small multipartite operators: tensor
// products, partial transposition, reshuffling, spectra and negativity.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace choicert {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using RMatrix = Eigen::MatrixXd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when input shapes or dimensions disagree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline double max_abs(const CMatrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline double hermitian_defect(const CMatrix& m) {
  return max_abs(m - m.adjoint());
}

}  // namespace detail

/// Ordered local dimensions of a tensor-product Hilbert space.
class SubsystemShape {
 public:
  SubsystemShape() = default;
  explicit SubsystemShape(std::vector<int> dims) : dims_(std::move(dims)) {
    for (int d : dims_) {
      if (d <= 0) throw DimensionError("subsystem dimensions must be positive");
    }
  }

  const std::vector<int>& dims() const { return dims_; }
  int factor(std::size_t k) const { return dims_.at(k); }
  std::size_t size() const { return dims_.size(); }

  int total() const {
    return std::accumulate(dims_.begin(), dims_.end(), 1, std::multiplies<>());
  }

  void check_matches(Eigen::Index dim) const {
    if (total() != dim) {
      throw DimensionError("shape of total dimension " + std::to_string(total()) +
                           " paired with a matrix of dimension " + std::to_string(dim));
    }
  }

  bool operator==(const SubsystemShape&) const = default;

 private:
  std::vector<int> dims_;
};

/// Square complex matrix equal to its adjoint.
///
/// Inputs within 1e-12 of Hermitian are symmetrized to (m + m^dagger)/2;
/// anything further off is rejected.
class HermitianMatrix {
 public:
  static constexpr double kHermitianTolerance = 1e-12;

  HermitianMatrix() = default;

  explicit HermitianMatrix(const CMatrix& m) {
    if (m.rows() != m.cols()) throw DimensionError("Hermitian matrix must be square");
    const double defect = detail::hermitian_defect(m);
    if (defect > kHermitianTolerance) {
      throw Error("matrix is not Hermitian (max |m - m^dagger| = " + std::to_string(defect) + ")");
    }
    m_ = 0.5 * (m + m.adjoint());
  }

  explicit HermitianMatrix(const RMatrix& m) : HermitianMatrix(CMatrix(m.cast<Complex>())) {}

  static HermitianMatrix identity(int dim) {
    return HermitianMatrix(CMatrix(CMatrix::Identity(dim, dim)));
  }

  int dim() const { return static_cast<int>(m_.rows()); }
  const CMatrix& matrix() const { return m_; }
  Complex operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }
  double trace() const { return m_.trace().real(); }

  /// Ascending eigenvalues.
  RVector eigenvalues() const {
    if (dim() == 0) return RVector();
    Eigen::SelfAdjointEigenSolver<CMatrix> es(m_, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
  }

  HermitianMatrix operator*(double s) const { return HermitianMatrix(Raw{}, m_ * s); }
  HermitianMatrix operator+(const HermitianMatrix& o) const {
    if (o.dim() != dim()) throw DimensionError("dimension mismatch in sum");
    return HermitianMatrix(Raw{}, m_ + o.m_);
  }

 private:
  struct Raw {};
  HermitianMatrix(Raw, CMatrix m) : m_(std::move(m)) {}
  friend HermitianMatrix assume_hermitian(CMatrix m);

  CMatrix m_;
};

/// Wraps a matrix known to be Hermitian up to roundoff, symmetrizing it
/// without the defect check.
inline HermitianMatrix assume_hermitian(CMatrix m) {
  CMatrix s = 0.5 * (m + m.adjoint());
  return HermitianMatrix(HermitianMatrix::Raw{}, std::move(s));
}

/// Kronecker product a (x) b.
inline CMatrix tensor_product(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

inline CMatrix tensor_product(const std::vector<CMatrix>& factors) {
  CMatrix out = CMatrix::Identity(1, 1);
  for (const auto& f : factors) out = tensor_product(out, f);
  return out;
}

inline HermitianMatrix tensor_product(const HermitianMatrix& a, const HermitianMatrix& b) {
  return assume_hermitian(tensor_product(a.matrix(), b.matrix()));
}

namespace detail {

// Mixed-radix digits of a flat index, most significant factor first.
inline void unflatten(int index, const std::vector<int>& dims, std::vector<int>& digits) {
  digits.resize(dims.size());
  for (std::size_t k = dims.size(); k-- > 0;) {
    digits[k] = index % dims[k];
    index /= dims[k];
  }
}

inline int flatten(const std::vector<int>& digits, const std::vector<int>& dims) {
  int index = 0;
  for (std::size_t k = 0; k < dims.size(); ++k) index = index * dims[k] + digits[k];
  return index;
}

}  // namespace detail

/// Transposes the tensor indices of the selected factors only.
inline CMatrix partial_transpose(const CMatrix& m, const SubsystemShape& shape,
                                 const std::set<int>& subsystems) {
  shape.check_matches(m.rows());
  if (m.rows() != m.cols()) throw DimensionError("partial transpose needs a square matrix");
  for (int s : subsystems) {
    if (s < 0 || s >= static_cast<int>(shape.size())) {
      throw DimensionError("subsystem index " + std::to_string(s) + " out of range");
    }
  }
  const auto& dims = shape.dims();
  const int n = shape.total();
  CMatrix out(n, n);
  std::vector<int> r, c;
  for (int i = 0; i < n; ++i) {
    detail::unflatten(i, dims, r);
    for (int j = 0; j < n; ++j) {
      detail::unflatten(j, dims, c);
      std::vector<int> r2 = r, c2 = c;
      for (int s : subsystems) std::swap(r2[s], c2[s]);
      out(detail::flatten(r2, dims), detail::flatten(c2, dims)) = m(i, j);
    }
  }
  return out;
}

inline HermitianMatrix partial_transpose(const HermitianMatrix& m, const SubsystemShape& shape,
                                         const std::set<int>& subsystems) {
  return assume_hermitian(partial_transpose(m.matrix(), shape, subsystems));
}

/// Reorders tensor factors: output factor k is input factor perm[k].
inline CMatrix permute_subsystems(const CMatrix& m, const SubsystemShape& shape,
                                  const std::vector<int>& perm) {
  shape.check_matches(m.rows());
  if (perm.size() != shape.size()) throw DimensionError("permutation length mismatch");
  std::vector<int> out_dims(perm.size());
  for (std::size_t k = 0; k < perm.size(); ++k) out_dims[k] = shape.factor(perm[k]);
  const int n = shape.total();
  std::vector<int> src(n);
  std::vector<int> digits, out_digits(perm.size());
  for (int i = 0; i < n; ++i) {
    detail::unflatten(i, out_dims, out_digits);
    digits.assign(perm.size(), 0);
    for (std::size_t k = 0; k < perm.size(); ++k) digits[perm[k]] = out_digits[k];
    src[i] = detail::flatten(digits, shape.dims());
  }
  CMatrix out(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) out(i, j) = m(src[i], src[j]);
  }
  return out;
}

/// Output entry (ij,kl) takes input entry (ik,jl); m is dim^2 x dim^2.
inline CMatrix reshuffle(const CMatrix& m, int dim) {
  const Eigen::Index n = static_cast<Eigen::Index>(dim) * dim;
  if (dim <= 0 || m.rows() != n || m.cols() != n) {
    throw DimensionError("reshuffle expects a dim^2 x dim^2 matrix");
  }
  CMatrix out(n, n);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j)
      for (int k = 0; k < dim; ++k)
        for (int l = 0; l < dim; ++l) out(i * dim + j, k * dim + l) = m(i * dim + k, j * dim + l);
  return out;
}

/// Largest singular value.
inline double spectral_norm(const CMatrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<CMatrix> svd(m);
  return svd.singularValues()(0);
}

/// Threshold below which eigenvalues count as zero: 1e-10 * max(1, ||m||_2).
inline double zero_threshold(const HermitianMatrix& m) {
  const RVector ev = m.eigenvalues();
  const double norm = ev.size() == 0 ? 0.0 : std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
  return 1e-10 * std::max(1.0, norm);
}

inline double trace_norm(const HermitianMatrix& m) { return m.eigenvalues().cwiseAbs().sum(); }

inline bool is_psd(const HermitianMatrix& m, double tol) {
  if (m.dim() == 0) return true;
  return m.eigenvalues()(0) >= -tol;
}

/// Negativity (||rho^PT||_1 - 1)/2 with respect to the factors in `cut`.
inline double negativity(const HermitianMatrix& rho, const SubsystemShape& shape,
                         const std::set<int>& cut) {
  if (std::abs(rho.trace() - 1.0) > 1e-10) {
    throw Error("negativity requires a unit-trace state (trace " + std::to_string(rho.trace()) + ")");
  }
  // ||.||_1 >= |tr| = 1, so anything below zero is roundoff
  const double n = 0.5 * (trace_norm(partial_transpose(rho, shape, cut)) - 1.0);
  return std::max(n, 0.0);
}

}  // namespace choicert
