#pragma once

// Quantum channels: superoperator, Kraus and Choi representations, CP/TP
// checks, composition and the channel families studied by the library.
//
// Conventions: rho'_{ij} = M_{ij,kl} rho_{kl} with row-major vectorization,
// and C = sum_ij Phi(|i><j|) (x) |i><j| (output factor first, ancilla
// second). In the canonical basis C is the reshuffle of M.

#include "choicert/bases.hpp"
#include "choicert/matops.hpp"

#include <array>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

namespace choicert {

enum class Representation { Superoperator, Kraus, Choi };

/// Completely positive trace-preserving map on a system of shape `shape`.
///
/// The superoperator is the canonical stored form; Choi and Kraus forms are
/// derived on first use and cached, so copies share one cache.
class Channel {
 public:
  static Channel from_superoperator(SubsystemShape shape, CMatrix m) {
    const int n = shape.total();
    if (m.rows() != n * n || m.cols() != n * n) throw DimensionError("superoperator must be N^2 x N^2");
    return Channel(std::move(shape), std::move(m));
  }

  static Channel from_kraus(SubsystemShape shape, const std::vector<CMatrix>& kraus) {
    const int n = shape.total();
    if (kraus.empty()) throw Error("empty Kraus set");
    CMatrix m = CMatrix::Zero(n * n, n * n);
    for (const auto& e : kraus) {
      if (e.rows() != n || e.cols() != n) throw DimensionError("Kraus operator has wrong dimension");
      m += tensor_product(e, CMatrix(e.conjugate()));
    }
    Channel ch(std::move(shape), std::move(m));
    ch.cache_->kraus = kraus;
    ch.cache_->kraus_once_done();
    return ch;
  }

  static Channel from_choi(SubsystemShape shape, const HermitianMatrix& choi) {
    const int n = shape.total();
    if (choi.dim() != n * n) throw DimensionError("Choi matrix must be N^2 x N^2");
    Channel ch(std::move(shape), reshuffle(choi.matrix(), n));
    ch.cache_->choi = choi;
    ch.cache_->choi_once_done();
    return ch;
  }

  const SubsystemShape& shape() const { return shape_; }
  int dim() const { return shape_.total(); }
  const CMatrix& superoperator() const { return m_; }

  /// Unnormalized Choi matrix, trace N for trace-preserving maps.
  const HermitianMatrix& choi() const {
    std::call_once(cache_->choi_flag, [this] {
      if (!cache_->choi) cache_->choi = HermitianMatrix(reshuffle(m_, dim()));
    });
    return *cache_->choi;
  }

  /// Canonical Kraus operators from the Choi eigendecomposition; eigenvalues
  /// below 1e-10 are dropped, giving at most N^2 operators.
  const std::vector<CMatrix>& kraus() const {
    std::call_once(cache_->kraus_flag, [this] {
      if (cache_->kraus) return;
      const int n = dim();
      Eigen::SelfAdjointEigenSolver<CMatrix> es(choi().matrix());
      std::vector<CMatrix> ops;
      for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
        const double lam = es.eigenvalues()(k);
        if (lam <= 1e-10) continue;
        CMatrix e(n, n);
        for (int a = 0; a < n; ++a)
          for (int i = 0; i < n; ++i) e(a, i) = std::sqrt(lam) * es.eigenvectors()(a * n + i, k);
        ops.push_back(std::move(e));
      }
      cache_->kraus = std::move(ops);
    });
    return *cache_->kraus;
  }

  /// Choi state C / N.
  HermitianMatrix choi_state() const { return choi() * (1.0 / dim()); }

  CMatrix apply(const CMatrix& rho) const {
    const int n = dim();
    if (rho.rows() != n || rho.cols() != n) throw DimensionError("apply: input has wrong dimension");
    CVector v(n * n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) v(i * n + j) = rho(i, j);
    const CVector w = m_ * v;
    CMatrix out(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) out(i, j) = w(i * n + j);
    return out;
  }

 private:
  struct Cache {
    std::once_flag choi_flag, kraus_flag;
    std::optional<HermitianMatrix> choi;
    std::optional<std::vector<CMatrix>> kraus;
    void choi_once_done() { std::call_once(choi_flag, [] {}); }
    void kraus_once_done() { std::call_once(kraus_flag, [] {}); }
  };

  Channel(SubsystemShape shape, CMatrix m)
      : shape_(std::move(shape)), m_(std::move(m)), cache_(std::make_shared<Cache>()) {}

  SubsystemShape shape_;
  CMatrix m_;
  std::shared_ptr<Cache> cache_;
};

inline const HermitianMatrix& choi_of(const Channel& ch) { return ch.choi(); }

struct ChannelReport {
  bool cp;
  bool tp;
  double trace;
  double min_eigenvalue;
  double tp_defect;
};

/// CP via Choi positivity, TP via sum_i C_{ij,il} = delta_jl.
inline ChannelReport check_channel(const Channel& ch, double tol = 1e-10) {
  const HermitianMatrix& c = ch.choi();
  const int n = ch.dim();
  ChannelReport r{};
  const RVector ev = c.eigenvalues();
  r.min_eigenvalue = ev(0);
  r.cp = r.min_eigenvalue >= -tol * std::max(1.0, ev.cwiseAbs().maxCoeff());
  r.trace = c.trace();
  double defect = 0;
  for (int j = 0; j < n; ++j) {
    for (int l = 0; l < n; ++l) {
      Complex s = 0;
      for (int i = 0; i < n; ++i) s += c(i * n + j, i * n + l);
      defect = std::max(defect, std::abs(s - (j == l ? 1.0 : 0.0)));
    }
  }
  r.tp_defect = defect;
  r.tp = defect <= tol;
  return r;
}

/// Kraus completeness defect max |sum E^dagger E - I|.
inline double kraus_completeness_defect(const std::vector<CMatrix>& kraus) {
  if (kraus.empty()) return 1.0;
  CMatrix s = CMatrix::Zero(kraus[0].cols(), kraus[0].cols());
  for (const auto& e : kraus) s += e.adjoint() * e;
  return detail::max_abs(s - CMatrix::Identity(s.rows(), s.cols()));
}

/// ch1 after ch2: superoperator M1 * M2.
inline Channel compose(const Channel& ch1, const Channel& ch2) {
  if (!(ch1.shape() == ch2.shape())) throw DimensionError("compose: channel shapes differ");
  return Channel::from_superoperator(ch1.shape(), ch1.superoperator() * ch2.superoperator());
}

/// ch1 (x) ch2 acting on the concatenated system.
inline Channel tensor_channel(const Channel& ch1, const Channel& ch2) {
  std::vector<int> dims = ch1.shape().dims();
  dims.insert(dims.end(), ch2.shape().dims().begin(), ch2.shape().dims().end());
  std::vector<CMatrix> kraus;
  for (const auto& a : ch1.kraus())
    for (const auto& b : ch2.kraus()) kraus.push_back(tensor_product(a, b));
  return Channel::from_kraus(SubsystemShape(std::move(dims)), kraus);
}

inline Channel identity_channel(SubsystemShape shape) {
  const int n = shape.total();
  return Channel::from_superoperator(std::move(shape), CMatrix::Identity(n * n, n * n));
}

/// Distortion lambda and translation t of a one-qubit channel in Pauli
/// transfer form: Bloch vector r -> diag(lambda) r + t.
struct OneQubitChannelParams {
  std::array<double, 3> lambda{1, 1, 1};
  std::array<double, 3> t{0, 0, 0};

  bool unital() const { return t[0] == 0 && t[1] == 0 && t[2] == 0; }
  bool planar() const { return lambda[1] == 0 && t[1] == 0; }
};

/// Fujiwara-Algoet conditions 1 +- l3 >= |l1 +- l2| (CP for unital channels).
inline bool fujiwara_algoet(const std::array<double, 3>& l, double tol = 1e-12) {
  return 1 + l[2] + tol >= std::abs(l[0] + l[1]) && 1 - l[2] + tol >= std::abs(l[0] - l[1]);
}

inline Channel one_qubit_channel(const OneQubitChannelParams& p) {
  RMatrix transfer = RMatrix::Zero(4, 4);
  transfer(0, 0) = 1;
  for (int k = 0; k < 3; ++k) {
    transfer(k + 1, 0) = p.t[k];
    transfer(k + 1, k + 1) = p.lambda[k];
  }
  const OperatorBasis pauli = make_basis(BasisKind::Pauli, 2);
  // Phi(rho) = sum_{mu nu} T_{mu nu} sigma_mu tr(sigma_nu rho) / 2
  CMatrix m = CMatrix::Zero(4, 4);
  for (int mu = 0; mu < 4; ++mu) {
    for (int nu = 0; nu < 4; ++nu) {
      if (transfer(mu, nu) == 0) continue;
      const CMatrix& a = pauli.elements[mu];
      const CMatrix& b = pauli.elements[nu];
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          for (int k = 0; k < 2; ++k)
            for (int l = 0; l < 2; ++l) m(i * 2 + j, k * 2 + l) += 0.5 * transfer(mu, nu) * a(i, j) * b(l, k);
    }
  }
  return Channel::from_superoperator(SubsystemShape({2}), m);
}

/// Unit-trace Choi state of the two-qubit channel a phi1(x)phi1 + b phi2(x)phi2
/// with b = 1/16 - a. Each product channel has a Choi matrix of trace 4, so
/// the state is 16a rho_1 + 16b rho_2 with rho_k the product Choi states.
inline HermitianMatrix planar_pair_channel(double a, const OneQubitChannelParams& phi1,
                                           const OneQubitChannelParams& phi2, double psd_tol = 1e-10) {
  if (!phi1.planar() || !phi2.planar()) throw Error("planar_pair_channel: channels must have lambda_2 = t_2 = 0");
  const double b = 1.0 / 16.0 - a;
  const Channel c1 = one_qubit_channel(phi1);
  const Channel c2 = one_qubit_channel(phi2);
  auto product_state = [](const Channel& c) {
    return permute_subsystems(tensor_product(c.choi().matrix(), c.choi().matrix()), SubsystemShape({2, 2, 2, 2}),
                              {0, 2, 1, 3});
  };
  CMatrix rho = 4.0 * (a * product_state(c1) + b * product_state(c2));
  HermitianMatrix state = assume_hermitian(rho);
  const double lmin = state.eigenvalues()(0);
  if (lmin < -psd_tol) {
    throw Error("planar_pair_channel: Choi state is not positive semidefinite (min eigenvalue " +
                std::to_string(lmin) + ")");
  }
  return state;
}

struct QutritDampingParams {
  double x = 0;
  double y = 0;

  /// Damping matrix diagonal: Lambda_{i != 3,8} = x, Lambda_3 = y, Lambda_8 = y^2.
  std::array<double, 8> damping() const {
    std::array<double, 8> l;
    l.fill(x);
    l[2] = y;
    l[7] = y * y;
    return l;
  }
};

struct QutritDamping {
  Channel channel;
  HermitianMatrix choi_state;
  bool psd;
  double min_eigenvalue;
};

/// Damping channel zeta -> Lambda zeta on the Gell-Mann Bloch vector of a
/// qutrit, rho = (1 + zeta . lambda) / 3.
inline QutritDamping qutrit_damping(const QutritDampingParams& p) {
  const OperatorBasis gm = make_basis(BasisKind::GellMann, 3);
  const auto lam = p.damping();
  // Phi(rho) = tr(rho) I/3 + sum_i Lambda_i lambda_i tr(lambda_i rho) / 2
  CMatrix m = CMatrix::Zero(9, 9);
  for (int a = 0; a < 3; ++a)
    for (int c = 0; c < 3; ++c) m(a * 3 + a, c * 3 + c) += 1.0 / 3.0;
  for (int i = 0; i < 8; ++i) {
    const CMatrix& g = gm.elements[i + 1];
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        for (int c = 0; c < 3; ++c)
          for (int d = 0; d < 3; ++d) m(a * 3 + b, c * 3 + d) += 0.5 * lam[i] * g(a, b) * g(d, c);
  }
  Channel ch = Channel::from_superoperator(SubsystemShape({3}), m);
  HermitianMatrix state = ch.choi_state();
  const double lmin = state.eigenvalues()(0);
  return {ch, state, lmin >= -1e-12, lmin};
}

/// Projector onto the symmetric (Dicke) subspace of q qubits:
/// P_{s,s'} = [wt(s) = wt(s')] / C(q, wt(s)).
inline RMatrix dicke_projector(int qubits) {
  const int n = 1 << qubits;
  RMatrix p = RMatrix::Zero(n, n);
  std::vector<double> binom(qubits + 1, 1.0);
  for (int k = 1; k <= qubits; ++k) binom[k] = binom[k - 1] * (qubits - k + 1) / k;
  for (int s = 0; s < n; ++s) {
    for (int r = 0; r < n; ++r) {
      const int w = __builtin_popcount(static_cast<unsigned>(s));
      if (w == __builtin_popcount(static_cast<unsigned>(r))) p(s, r) = 1.0 / binom[w];
    }
  }
  return p;
}

/// True iff c lives on the symmetric subspace: (1-P)C(1-P), (1-P)CP and
/// PC(1-P) all vanish to 1e-10. Accepts 2^q x 2^q matrices with q >= 2
/// (16 x 16 for two-qubit channels, 4 x 4 for the one-qubit analogue).
inline bool symmetric_choi_check(const HermitianMatrix& c, double tol = 1e-10) {
  int q = 0;
  while ((1 << q) < c.dim()) ++q;
  if ((1 << q) != c.dim() || q < 2) throw DimensionError("symmetric_choi_check expects a 2^q x 2^q matrix, q >= 2");
  const CMatrix p = dicke_projector(q).cast<Complex>();
  const CMatrix comp = CMatrix::Identity(c.dim(), c.dim()) - p;
  const double d1 = detail::max_abs(comp * c.matrix() * comp);
  const double d2 = detail::max_abs(comp * c.matrix() * p);
  const double d3 = detail::max_abs(p * c.matrix() * comp);
  return std::max({d1, d2, d3}) <= tol;
}

}  // namespace choicert
