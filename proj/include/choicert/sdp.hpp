#pragma once

// Semidefinite programs in linear-matrix-inequality form
//
//   minimize  c^T y   subject to  F_b(y) = F0_b + sum_i y_i F_ib >= 0  for every block b,
//
// with some variables pinned to fixed values. The dual is
//   maximize -sum_b tr(F0_b X_b)  subject to  sum_b tr(F_ib X_b) = c_i,  X_b >= 0.
//
// The built-in backend is an infeasible-start primal-dual path-following
// method with the HKM search direction and Mehrotra's predictor-corrector.
// Feasibility questions go through a two-phase driver that never reports
// infeasibility without an independently checked dual certificate.

#include "choicert/matops.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace choicert {

/// One structural nonzero of a block: entry (row, col), row <= col, gets
/// coef * y_var (var = -1 for the constant term). Off-diagonal entries are
/// mirrored.
struct SdpEntry {
  int row;
  int col;
  int var;
  double coef;
};

struct SdpBlock {
  int dim = 0;
  /// Diagonal blocks are collections of scalar inequalities.
  bool diagonal = false;
  /// Auxiliary blocks (variable bounds) are left out of the feasibility margin.
  bool auxiliary = false;
  std::string label;
  std::vector<SdpEntry> entries;
};

struct SdpProblem {
  int num_vars = 0;
  std::vector<double> objective;
  std::vector<SdpBlock> blocks;
  std::vector<std::pair<int, double>> pins;
  /// |y_i| <= bounds[i] holds on the feasible set of interest (empty: none).
  std::vector<double> bounds;
};

struct SdpOptions {
  double tolerance = 1e-9;
  /// Accuracy accepted when progress stalls before reaching `tolerance`.
  double reduced_tolerance = 1e-6;
  int max_iterations = 120;
  /// Initial scaling of X and Z (0: chosen from the data).
  double initial_scale = 0;
  /// Phase-1 optimum below -feasibility_tolerance counts as infeasible,
  /// provided the certificate check also fails by more than certificate_margin.
  double feasibility_tolerance = 1e-7;
  double certificate_margin = 1e-7;
  bool verbose = false;
};

enum class SdpStatus { Optimal, Infeasible, Unknown };

inline std::string to_string(SdpStatus s) {
  switch (s) {
    case SdpStatus::Optimal: return "optimal";
    case SdpStatus::Infeasible: return "infeasible";
    case SdpStatus::Unknown: return "unknown";
  }
  return "?";
}

struct SdpResult {
  SdpStatus status = SdpStatus::Unknown;
  /// All variables, pins included.
  std::vector<double> y;
  /// Dual blocks (diagonal blocks stored as a column).
  std::vector<RMatrix> x;
  double primal_objective = 0;
  double dual_objective = 0;
  double primal_infeasibility = 0;
  double dual_infeasibility = 0;
  double relative_gap = 0;
  int iterations = 0;
  std::string message;
};

/// Pluggable optimizer. Implementations must be safe to use from several
/// threads on independent problems.
class SdpBackend {
 public:
  virtual ~SdpBackend() = default;
  virtual std::string name() const = 0;
  virtual SdpResult optimize(const SdpProblem& problem, const SdpOptions& options) const = 0;
};

// ---------------------------------------------------------------------------
// Evaluation helpers shared by backends and checks

/// Dense value of block b at the full variable vector y.
inline RMatrix evaluate_block(const SdpBlock& b, const std::vector<double>& y) {
  RMatrix m = RMatrix::Zero(b.dim, b.diagonal ? 1 : b.dim);
  for (const auto& e : b.entries) {
    const double v = e.coef * (e.var < 0 ? 1.0 : y.at(e.var));
    if (b.diagonal) {
      m(e.row, 0) += v;
    } else {
      m(e.row, e.col) += v;
      if (e.row != e.col) m(e.col, e.row) += v;
    }
  }
  return m;
}

inline double min_eigenvalue(const SdpBlock& b, const RMatrix& value) {
  if (value.size() == 0) return 0;
  if (b.diagonal) return value.minCoeff();
  Eigen::SelfAdjointEigenSolver<RMatrix> es(value, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

namespace detail {

struct Term {
  int row;
  int col;
  double coef;
};

// A block with pins folded into the constant and variables renumbered.
struct PreparedBlock {
  int dim = 0;
  bool diagonal = false;
  bool auxiliary = false;
  RMatrix f0;  // dim x dim, or dim x 1 for diagonal blocks
  std::vector<int> vars;  // free variables present in this block
  std::vector<std::vector<Term>> terms;  // parallel to vars
};

struct PreparedProblem {
  int m = 0;
  std::vector<int> free_to_var;
  std::vector<int> var_to_free;
  RVector c;
  double objective_offset = 0;
  std::vector<PreparedBlock> blocks;
};

inline PreparedProblem prepare(const SdpProblem& p) {
  if (static_cast<int>(p.objective.size()) != p.num_vars) throw Error("sdp: objective length mismatch");
  PreparedProblem out;
  std::vector<double> pinned(p.num_vars, 0.0);
  std::vector<char> is_pinned(p.num_vars, 0);
  for (const auto& [v, val] : p.pins) {
    if (v < 0 || v >= p.num_vars) throw Error("sdp: pin on unknown variable");
    is_pinned[v] = 1;
    pinned[v] = val;
  }
  out.var_to_free.assign(p.num_vars, -1);
  for (int v = 0; v < p.num_vars; ++v) {
    if (is_pinned[v]) {
      out.objective_offset += p.objective[v] * pinned[v];
    } else {
      out.var_to_free[v] = out.m++;
      out.free_to_var.push_back(v);
    }
  }
  out.c.resize(out.m);
  for (int i = 0; i < out.m; ++i) out.c(i) = p.objective[out.free_to_var[i]];
  for (const auto& b : p.blocks) {
    PreparedBlock pb;
    pb.dim = b.dim;
    pb.diagonal = b.diagonal;
    pb.auxiliary = b.auxiliary;
    pb.f0 = RMatrix::Zero(b.dim, b.diagonal ? 1 : b.dim);
    std::map<int, std::vector<Term>> by_var;
    for (const auto& e : b.entries) {
      if (e.row < 0 || e.col < 0 || e.row >= b.dim || e.col >= b.dim) throw Error("sdp: entry outside its block");
      if (b.diagonal && e.row != e.col) throw Error("sdp: off-diagonal entry in a diagonal block");
      int r = e.row, c = e.col;
      if (r > c) std::swap(r, c);
      if (e.var < 0 || is_pinned[e.var]) {
        const double v = e.coef * (e.var < 0 ? 1.0 : pinned[e.var]);
        if (b.diagonal) {
          pb.f0(r, 0) += v;
        } else {
          pb.f0(r, c) += v;
          if (r != c) pb.f0(c, r) += v;
        }
      } else {
        by_var[out.var_to_free[e.var]].push_back({r, c, e.coef});
      }
    }
    for (auto& [v, t] : by_var) {
      pb.vars.push_back(v);
      pb.terms.push_back(std::move(t));
    }
    out.blocks.push_back(std::move(pb));
  }
  return out;
}

// F0 + sum_i y_i F_i for one prepared block.
inline RMatrix apply_block(const PreparedBlock& b, const RVector& y) {
  RMatrix m = b.f0;
  for (std::size_t k = 0; k < b.vars.size(); ++k) {
    const double yi = y(b.vars[k]);
    if (yi == 0) continue;
    for (const auto& t : b.terms[k]) {
      if (b.diagonal) {
        m(t.row, 0) += yi * t.coef;
      } else {
        m(t.row, t.col) += yi * t.coef;
        if (t.row != t.col) m(t.col, t.row) += yi * t.coef;
      }
    }
  }
  return m;
}

// out_i += tr(F_i a) for symmetric (or diagonal) a.
inline void adjoint_block(const PreparedBlock& b, const RMatrix& a, RVector& out) {
  for (std::size_t k = 0; k < b.vars.size(); ++k) {
    double s = 0;
    for (const auto& t : b.terms[k]) {
      if (b.diagonal) {
        s += t.coef * a(t.row, 0);
      } else {
        s += t.coef * (t.row == t.col ? a(t.row, t.row) : a(t.row, t.col) + a(t.col, t.row));
      }
    }
    out(b.vars[k]) += s;
  }
}

// O_ij += tr(F_i X F_j Zinv) on the upper triangle.
inline void schur_block(const PreparedBlock& b, const RMatrix& x, const RMatrix& zinv, RMatrix& o) {
  const std::size_t nv = b.vars.size();
  if (b.diagonal) {
    // F_i X F_j Zinv is diagonal: sum_k F_i(k) F_j(k) x_k / z_k
    RVector w = x.col(0).cwiseProduct(zinv.col(0));
    std::vector<std::vector<std::pair<int, double>>> by_row(b.dim);
    for (std::size_t k = 0; k < nv; ++k)
      for (const auto& t : b.terms[k]) by_row[t.row].push_back({b.vars[k], t.coef});
    for (int r = 0; r < b.dim; ++r) {
      for (const auto& [vi, ci] : by_row[r]) {
        for (const auto& [vj, cj] : by_row[r]) {
          if (vi <= vj) o(vi, vj) += ci * cj * w(r);
        }
      }
    }
    return;
  }
  const int s = b.dim;
  RMatrix u, v, p;
  for (std::size_t k = 0; k < nv; ++k) {
    const auto& terms = b.terms[k];
    int cols = 0;
    for (const auto& t : terms) cols += t.row == t.col ? 1 : 2;
    u.resize(s, cols);
    v.resize(cols, s);
    int c = 0;
    // X F_i Zinv = sum coef (X e_r e_c^T + X e_c e_r^T) Zinv
    for (const auto& t : terms) {
      u.col(c) = t.coef * x.col(t.row);
      v.row(c) = zinv.row(t.col);
      ++c;
      if (t.row != t.col) {
        u.col(c) = t.coef * x.col(t.col);
        v.row(c) = zinv.row(t.row);
        ++c;
      }
    }
    p.noalias() = u * v;
    const int vi = b.vars[k];
    for (std::size_t l = k; l < nv; ++l) {
      double sum = 0;
      for (const auto& t : b.terms[l]) {
        sum += t.coef * (t.row == t.col ? p(t.row, t.row) : p(t.row, t.col) + p(t.col, t.row));
      }
      const int vj = b.vars[l];
      if (vi <= vj) {
        o(vi, vj) += sum;
      } else {
        o(vj, vi) += sum;
      }
    }
  }
}

inline double block_dot(const RMatrix& a, const RMatrix& b) { return (a.array() * b.array()).sum(); }

// Largest alpha in (0, 1] keeping m + alpha dm PSD (scaled by tau).
inline double step_length(const PreparedBlock& b, const RMatrix& m, const RMatrix& dm, double tau) {
  double lmin;
  if (b.diagonal) {
    lmin = std::numeric_limits<double>::infinity();
    for (int r = 0; r < b.dim; ++r) lmin = std::min(lmin, dm(r, 0) / m(r, 0));
  } else {
    Eigen::LLT<RMatrix> llt(m);
    if (llt.info() != Eigen::Success) return 0;
    RMatrix linv_dm = llt.matrixL().solve(dm);
    RMatrix s = llt.matrixL().solve(linv_dm.transpose()).transpose();
    s = 0.5 * (s + s.transpose());
    Eigen::SelfAdjointEigenSolver<RMatrix> es(s, Eigen::EigenvaluesOnly);
    lmin = es.eigenvalues()(0);
  }
  if (lmin >= 0) return 1.0;
  return std::min(1.0, -tau / lmin);
}

inline bool is_pd(const PreparedBlock& b, const RMatrix& m) {
  if (b.diagonal) return m.minCoeff() > 0;
  Eigen::LLT<RMatrix> llt(m);
  return llt.info() == Eigen::Success;
}

inline RMatrix inverse_spd(const PreparedBlock& b, const RMatrix& m) {
  if (b.diagonal) return m.cwiseInverse();
  Eigen::LLT<RMatrix> llt(m);
  RMatrix inv = llt.solve(RMatrix::Identity(m.rows(), m.cols()));
  return 0.5 * (inv + inv.transpose());
}

}  // namespace detail

/// Dense primal-dual interior-point backend ("ipm").
class IpmBackend : public SdpBackend {
 public:
  std::string name() const override { return "ipm"; }

  SdpResult optimize(const SdpProblem& problem, const SdpOptions& opt) const override {
    using namespace detail;
    const PreparedProblem pp = prepare(problem);
    const int m = pp.m;
    const std::size_t nb = pp.blocks.size();
    int total_dim = 0;
    for (const auto& b : pp.blocks) total_dim += b.dim;

    double data_scale = 1;
    for (const auto& b : pp.blocks) data_scale = std::max(data_scale, b.f0.cwiseAbs().maxCoeff());
    const double c_norm = pp.c.size() ? pp.c.cwiseAbs().maxCoeff() : 0.0;
    const double scale = opt.initial_scale > 0 ? opt.initial_scale : 10.0 * std::max(data_scale, 1.0);
    const double xscale = opt.initial_scale > 0 ? opt.initial_scale : 10.0 * std::max(c_norm, 1.0);

    RVector y = RVector::Zero(m);
    std::vector<RMatrix> X(nb), Z(nb);
    for (std::size_t k = 0; k < nb; ++k) {
      const auto& b = pp.blocks[k];
      if (b.diagonal) {
        X[k] = RMatrix::Constant(b.dim, 1, xscale);
        Z[k] = RMatrix::Constant(b.dim, 1, scale);
      } else {
        X[k] = xscale * RMatrix::Identity(b.dim, b.dim);
        Z[k] = scale * RMatrix::Identity(b.dim, b.dim);
      }
    }

    SdpResult res;
    const double f0_norm = [&] {
      double s = 0;
      for (const auto& b : pp.blocks) s += b.f0.squaredNorm();
      return std::sqrt(s);
    }();
    auto finish = [&](SdpStatus status, std::string msg) {
      res.status = status;
      res.message = std::move(msg);
      res.y.assign(problem.num_vars, 0.0);
      for (const auto& [v, val] : problem.pins) res.y[v] = val;
      for (int i = 0; i < m; ++i) res.y[pp.free_to_var[i]] = y(i);
      res.x = X;
      return res;
    };

    int stalls = 0;
    struct Snapshot {
      double err;
      RVector y;
      std::vector<RMatrix> x;
      SdpResult res;
    } best{std::numeric_limits<double>::infinity(), y, X, res};
    int since_best = 0;
    for (int iter = 0; iter < opt.max_iterations; ++iter) {
      res.iterations = iter;
      // residuals
      RVector atx = RVector::Zero(m);
      std::vector<RMatrix> rd(nb), zinv(nb);
      double rd_norm2 = 0, mu = 0, pobj = pp.objective_offset, dobj = pp.objective_offset;
      for (std::size_t k = 0; k < nb; ++k) {
        adjoint_block(pp.blocks[k], X[k], atx);
        rd[k] = apply_block(pp.blocks[k], y) - Z[k];
        rd_norm2 += rd[k].squaredNorm();
        mu += block_dot(X[k], Z[k]);
        dobj -= block_dot(pp.blocks[k].f0, X[k]);
      }
      mu /= total_dim;
      pobj += pp.c.dot(y);
      const RVector rp = pp.c - atx;
      res.primal_objective = pobj;
      res.dual_objective = dobj;
      res.dual_infeasibility = std::sqrt(rd_norm2) / (1 + f0_norm);
      res.primal_infeasibility = (m ? rp.norm() : 0.0) / (1 + pp.c.norm());
      res.relative_gap = std::abs(pobj - dobj) / (1 + std::abs(pobj) + std::abs(dobj));
      if (opt.verbose) {
        std::fprintf(stderr, "ipm %3d  p=% .10e d=% .10e  pinf=%.2e dinf=%.2e gap=%.2e mu=%.2e\n", iter, pobj,
                     dobj, res.primal_infeasibility, res.dual_infeasibility, res.relative_gap, mu);
      }
      if (!std::isfinite(pobj) || !std::isfinite(dobj) || !std::isfinite(mu)) {
        return finish(SdpStatus::Unknown, "numerical breakdown");
      }
      if (res.primal_infeasibility < opt.tolerance && res.dual_infeasibility < opt.tolerance &&
          (res.relative_gap < opt.tolerance || mu < opt.tolerance * 1e-2)) {
        return finish(SdpStatus::Optimal, "converged");
      }
      // Roundoff eventually dominates on degenerate problems; keep the best
      // iterate and stop once it no longer improves.
      const double err = std::max({res.primal_infeasibility, res.dual_infeasibility, res.relative_gap});
      if (err < best.err) {
        best = {err, y, X, res};
        since_best = 0;
      } else if (++since_best >= 8 || mu < 1e-15 * (1 + std::abs(pobj))) {
        y = best.y;
        X = best.x;
        const int it = res.iterations;
        res = best.res;
        res.iterations = it;
        if (best.err < opt.reduced_tolerance) return finish(SdpStatus::Optimal, "converged to reduced accuracy");
        return finish(SdpStatus::Unknown, "stalled");
      }
      // dual blows up while the primal stays bounded: LMI side infeasible
      const double xnorm = [&] {
        double s = 0;
        for (const auto& xk : X) s += xk.squaredNorm();
        return std::sqrt(s);
      }();
      if (dobj > 1e10 * std::max(1.0, std::abs(pobj)) && xnorm > 1e10) {
        return finish(SdpStatus::Infeasible, "dual objective diverges");
      }

      for (std::size_t k = 0; k < nb; ++k) zinv[k] = inverse_spd(pp.blocks[k], Z[k]);

      RMatrix o = RMatrix::Zero(m, m);
      for (std::size_t k = 0; k < nb; ++k) schur_block(pp.blocks[k], X[k], zinv[k], o);
      o = o.selfadjointView<Eigen::Upper>();
      Eigen::LLT<RMatrix> chol;
      {
        const double diag_max = m ? o.diagonal().cwiseAbs().maxCoeff() : 1.0;
        double reg = 0;
        for (int attempt = 0; attempt < 6; ++attempt) {
          RMatrix oo = o;
          if (reg > 0) oo.diagonal().array() += reg;
          chol.compute(oo);
          if (chol.info() == Eigen::Success) break;
          reg = reg == 0 ? 1e-14 * std::max(diag_max, 1.0) : reg * 100;
        }
        if (chol.info() != Eigen::Success) return finish(SdpStatus::Unknown, "Schur complement not positive definite");
      }

      // Solves for a direction given sigma*mu and the corrector product K.
      auto direction = [&](double target, const std::vector<RMatrix>* kprod, RVector& dy, std::vector<RMatrix>& dx,
                           std::vector<RMatrix>& dz) {
        RVector rhs = -pp.c;
        std::vector<RMatrix> base(nb);
        for (std::size_t k = 0; k < nb; ++k) {
          const auto& b = pp.blocks[k];
          if (b.diagonal) {
            RMatrix t = target * zinv[k] - X[k].cwiseProduct(rd[k]).cwiseProduct(zinv[k]);
            if (kprod) t -= (*kprod)[k].cwiseProduct(zinv[k]);
            base[k] = t;
          } else {
            RMatrix t = target * zinv[k] - X[k] * rd[k] * zinv[k];
            if (kprod) t -= (*kprod)[k] * zinv[k];
            base[k] = 0.5 * (t + t.transpose());
          }
          adjoint_block(b, base[k], rhs);
        }
        dy = chol.solve(rhs);
        dx.resize(nb);
        dz.resize(nb);
        for (std::size_t k = 0; k < nb; ++k) {
          const auto& b = pp.blocks[k];
          RMatrix fdy = apply_block(b, dy) - b.f0;
          dz[k] = rd[k] + fdy;
          if (b.diagonal) {
            dx[k] = base[k] - X[k] - X[k].cwiseProduct(fdy).cwiseProduct(zinv[k]);
          } else {
            RMatrix t = -X[k] * fdy * zinv[k];
            dx[k] = base[k] - X[k] + 0.5 * (t + t.transpose());
          }
        }
      };

      RVector dy;
      std::vector<RMatrix> dx, dz;
      direction(0.0, nullptr, dy, dx, dz);
      double ap = 1, ad = 1;
      for (std::size_t k = 0; k < nb; ++k) {
        ap = std::min(ap, step_length(pp.blocks[k], X[k], dx[k], 1.0));
        ad = std::min(ad, step_length(pp.blocks[k], Z[k], dz[k], 1.0));
      }
      double mu_aff = 0;
      for (std::size_t k = 0; k < nb; ++k) mu_aff += block_dot(X[k] + ap * dx[k], Z[k] + ad * dz[k]);
      mu_aff /= total_dim;
      double sigma = std::pow(std::max(0.0, mu_aff) / mu, 3);
      sigma = std::clamp(sigma, 0.0, 1.0);

      std::vector<RMatrix> kprod(nb);
      for (std::size_t k = 0; k < nb; ++k) {
        kprod[k] = pp.blocks[k].diagonal ? RMatrix(dx[k].cwiseProduct(dz[k])) : RMatrix(dx[k] * dz[k]);
      }
      direction(sigma * mu, &kprod, dy, dx, dz);

      const double tau = mu < 1e-6 ? 0.98 : 0.95;
      ap = 1;
      ad = 1;
      for (std::size_t k = 0; k < nb; ++k) {
        ap = std::min(ap, step_length(pp.blocks[k], X[k], dx[k], tau));
        ad = std::min(ad, step_length(pp.blocks[k], Z[k], dz[k], tau));
      }
      if (ap < 1e-10 && ad < 1e-10) {
        if (++stalls > 3) return finish(SdpStatus::Unknown, "step lengths vanished");
      } else {
        stalls = 0;
      }
      for (std::size_t k = 0; k < nb; ++k) {
        X[k] += ap * dx[k];
        Z[k] += ad * dz[k];
      }
      y += ad * dy;
    }
    y = best.y;
    X = best.x;
    res = best.res;
    res.iterations = opt.max_iterations;
    if (best.err < opt.reduced_tolerance) return finish(SdpStatus::Optimal, "iteration limit, reduced accuracy");
    return finish(SdpStatus::Unknown, "iteration limit reached");
  }
};

/// Backend registry: "ipm" is always available; more can be registered.
class BackendRegistry {
 public:
  using Factory = std::function<std::shared_ptr<const SdpBackend>()>;

  static BackendRegistry& instance() {
    static BackendRegistry r;
    return r;
  }

  void add(const std::string& name, Factory f) {
    std::lock_guard<std::mutex> lock(mu_);
    factories_[name] = std::move(f);
  }

  std::shared_ptr<const SdpBackend> make(const std::string& name) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = factories_.find(name);
    if (it == factories_.end()) throw Error("unknown SDP backend '" + name + "'");
    return it->second();
  }

  std::vector<std::string> names() const {
    std::lock_guard<std::mutex> lock(mu_);
    std::vector<std::string> out;
    for (const auto& kv : factories_) out.push_back(kv.first);
    return out;
  }

 private:
  BackendRegistry() {
    factories_["ipm"] = [] { return std::make_shared<IpmBackend>(); };
  }
  mutable std::mutex mu_;
  std::map<std::string, Factory> factories_;
};

inline std::shared_ptr<const SdpBackend> make_backend(const std::string& name) {
  return BackendRegistry::instance().make(name);
}

// ---------------------------------------------------------------------------
// Feasibility driver

enum class Feasibility { Feasible, Infeasible, Unknown };

inline std::string to_string(Feasibility f) {
  switch (f) {
    case Feasibility::Feasible: return "feasible";
    case Feasibility::Infeasible: return "infeasible";
    case Feasibility::Unknown: return "unknown";
  }
  return "?";
}

struct FeasibilityResult {
  Feasibility status = Feasibility::Unknown;
  /// Optimal solution of the original objective when feasible.
  SdpResult solution;
  /// Largest s with every non-auxiliary block >= s I.
  double margin = 0;
  /// Certificate value: negative proves infeasibility (see check_infeasibility).
  double certificate = 0;
  std::vector<std::string> diagnostics;
};

/// Independent check of an infeasibility certificate X (one matrix per block,
/// auxiliary blocks ignored): returns
///   sum_b tr(F0_b X_b) + sum_i |sum_b tr(F_ib X_b)| * bounds_i
/// after projecting X onto the PSD cone and normalizing its trace to one.
/// A negative value shows that no y with |y_i| <= bounds_i makes every block PSD.
inline double check_infeasibility(const SdpProblem& problem, const std::vector<RMatrix>& x) {
  if (x.size() != problem.blocks.size()) throw Error("certificate has the wrong number of blocks");
  std::vector<RMatrix> xp(x.size());
  double trace = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const auto& b = problem.blocks[k];
    if (b.auxiliary) continue;
    if (b.diagonal) {
      xp[k] = x[k].cwiseMax(0.0);
      trace += xp[k].sum();
    } else {
      Eigen::SelfAdjointEigenSolver<RMatrix> es(0.5 * (x[k] + x[k].transpose()));
      RVector ev = es.eigenvalues().cwiseMax(0.0);
      xp[k] = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
      trace += ev.sum();
    }
  }
  if (!(trace > 0)) return std::numeric_limits<double>::infinity();
  std::vector<double> pinned(problem.num_vars, 0.0);
  std::vector<char> is_pinned(problem.num_vars, 0);
  for (const auto& [v, val] : problem.pins) {
    pinned[v] = val;
    is_pinned[v] = 1;
  }
  double constant = 0;
  std::vector<double> g(problem.num_vars, 0.0);
  for (std::size_t k = 0; k < x.size(); ++k) {
    const auto& b = problem.blocks[k];
    if (b.auxiliary) continue;
    const RMatrix xn = xp[k] / trace;
    for (const auto& e : b.entries) {
      const double w = b.diagonal ? xn(e.row, 0) : (e.row == e.col ? xn(e.row, e.row) : 2 * xn(e.row, e.col));
      if (e.var < 0) {
        constant += e.coef * w;
      } else if (is_pinned[e.var]) {
        constant += e.coef * pinned[e.var] * w;
      } else {
        g[e.var] += e.coef * w;
      }
    }
  }
  double margin = constant;
  for (int v = 0; v < problem.num_vars; ++v) {
    if (is_pinned[v] || g[v] == 0) continue;
    if (problem.bounds.empty() || !std::isfinite(problem.bounds[v])) return std::numeric_limits<double>::infinity();
    margin += std::abs(g[v]) * problem.bounds[v];
  }
  return margin;
}

/// Largest PSD violation of y over all blocks, max(0, -lambda_min), each
/// block scaled by max(1, its largest |entry|).
inline double max_block_violation(const SdpProblem& problem, const std::vector<double>& y) {
  double worst = 0;
  for (const auto& b : problem.blocks) {
    const RMatrix v = evaluate_block(b, y);
    if (v.size() == 0) continue;
    worst = std::max(worst, -min_eigenvalue(b, v) / std::max(1.0, v.cwiseAbs().maxCoeff()));
  }
  return worst;
}

/// Feasible status for a solve whose objective did not converge, when its
/// best iterate satisfies every block within the feasibility tolerance. This
/// is the usual outcome on problems without a strictly feasible point.
inline Feasibility classify_solution(const SdpProblem& problem, const SdpResult& r, const SdpOptions& opt,
                                     std::vector<std::string>& diagnostics) {
  if (r.status == SdpStatus::Optimal) return Feasibility::Feasible;
  if (r.y.size() != static_cast<std::size_t>(problem.num_vars)) return Feasibility::Unknown;
  const double viol = max_block_violation(problem, r.y);
  if (viol <= opt.feasibility_tolerance) {
    diagnostics.push_back("objective not converged; best iterate feasible (violation " + std::to_string(viol) + ")");
    return Feasibility::Feasible;
  }
  return Feasibility::Unknown;
}

/// Phase 1 maximizes s subject to F_b(y) - s I >= 0 on the non-auxiliary
/// blocks (auxiliary blocks as given, plus s <= 1). A clearly negative
/// optimum whose dual passes check_infeasibility means infeasible;
/// otherwise phase 2 optimizes the original objective.
inline FeasibilityResult solve_feasibility(const SdpProblem& problem, const SdpBackend& backend,
                                           const SdpOptions& opt) {
  FeasibilityResult out;
  SdpProblem p1 = problem;
  const int s = problem.num_vars;
  p1.num_vars = s + 1;
  p1.objective.assign(s + 1, 0.0);
  p1.objective[s] = -1.0;
  for (auto& b : p1.blocks) {
    if (b.auxiliary) continue;
    for (int r = 0; r < b.dim; ++r) b.entries.push_back({r, r, s, -1.0});
  }
  SdpBlock cap;
  cap.dim = 1;
  cap.diagonal = true;
  cap.auxiliary = true;
  cap.label = "phase1-cap";
  cap.entries = {{0, 0, -1, 1.0}, {0, 0, s, -1.0}};
  p1.blocks.push_back(cap);

  const SdpResult r1 = backend.optimize(p1, opt);
  out.diagnostics.push_back("phase1: " + to_string(r1.status) + " (" + r1.message + ", " +
                            std::to_string(r1.iterations) + " iterations)");
  if (r1.status != SdpStatus::Optimal) {
    out.status = Feasibility::Unknown;
    return out;
  }
  out.margin = r1.y[s];
  out.diagnostics.push_back("phase1 margin: " + std::to_string(out.margin));
  if (out.margin < -opt.feasibility_tolerance) {
    std::vector<RMatrix> x(r1.x.begin(), r1.x.begin() + static_cast<std::ptrdiff_t>(problem.blocks.size()));
    out.certificate = check_infeasibility(problem, x);
    out.diagnostics.push_back("certificate: " + std::to_string(out.certificate));
    out.status = out.certificate < -opt.certificate_margin ? Feasibility::Infeasible : Feasibility::Unknown;
    return out;
  }
  const SdpResult r2 = backend.optimize(problem, opt);
  out.diagnostics.push_back("phase2: " + to_string(r2.status) + " (" + r2.message + ", " +
                            std::to_string(r2.iterations) + " iterations)");
  out.solution = r2;
  out.status = classify_solution(problem, r2, opt, out.diagnostics);
  return out;
}

}  // namespace choicert
