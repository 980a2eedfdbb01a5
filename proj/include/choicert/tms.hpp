#pragma once

// Truncated moment sequences, the Choi-coordinate to moment map for each
// separability cut, and moment / localizing matrices.

#include "choicert/bases.hpp"
#include "choicert/channels.hpp"
#include "choicert/multi_index.hpp"
#include "choicert/polynomial.hpp"
#include "choicert/semialg.hpp"

#include <memory>
#include <string>
#include <vector>

namespace choicert {

/// Moments y_alpha for |alpha| <= degree, flat in grlex rank order.
///
/// `known` marks the moments fixed by data; the others are placeholders
/// (zero) to be completed by a relaxation. Sequences built from measures
/// are fully known.
struct Tms {
  int n = 0;
  int degree = 0;
  std::vector<double> y;
  std::vector<char> known;

  Tms() = default;
  Tms(int n_, int degree_) : n(n_), degree(degree_), y(count_indices(n_, degree_), 0.0), known(y.size(), 0) {}

  const IndexTable& table() const {
    if (!table_) table_ = IndexTable::get(n, degree);
    return *table_;
  }

  double operator[](const MultiIndex& a) const { return y.at(table().rank(a)); }
  std::size_t num_known() const { return static_cast<std::size_t>(std::count(known.begin(), known.end(), 1)); }

 private:
  mutable std::shared_ptr<const IndexTable> table_;
};

// ---------------------------------------------------------------------------
// Moment and localizing matrices

namespace detail {

// Ranks of alpha + beta + shift for alpha, beta running over degree <= t.
inline std::vector<int> sum_ranks(const IndexTable& table, int t, const MultiIndex& shift) {
  const std::size_t s = table.prefix(t);
  std::vector<int> out(s * s);
  for (std::size_t i = 0; i < s; ++i) {
    const MultiIndex ai = table.index(i) + shift;
    for (std::size_t j = i; j < s; ++j) {
      const int r = table.rank(ai + table.index(j));
      out[i * s + j] = r;
      out[j * s + i] = r;
    }
  }
  return out;
}

inline void require_degree(const Tms& y, int needed, const char* what) {
  if (needed > y.degree) {
    throw Error(std::string(what) + ": needs moments up to degree " + std::to_string(needed) + ", have " +
                std::to_string(y.degree));
  }
}

}  // namespace detail

/// M_t(y)_{alpha beta} = y_{alpha + beta}, |alpha|, |beta| <= t.
inline RMatrix moment_matrix(const Tms& y, int t) {
  detail::require_degree(y, 2 * t, "moment_matrix");
  const IndexTable& table = y.table();
  const auto s = static_cast<Eigen::Index>(table.prefix(t));
  const auto ranks = detail::sum_ranks(table, t, MultiIndex(y.n, 0));
  RMatrix m(s, s);
  for (Eigen::Index i = 0; i < s; ++i)
    for (Eigen::Index j = 0; j < s; ++j) m(i, j) = y.y[ranks[i * s + j]];
  return m;
}

/// (g * y)_alpha = sum_gamma g_gamma y_{alpha + gamma}; result has degree
/// degree(y) - deg(g).
inline Tms shifted_sequence(const RealPolynomial& g, const Tms& y) {
  if (g.num_vars() != y.n) throw DimensionError("shifted_sequence: variable count mismatch");
  detail::require_degree(y, g.degree(), "shifted_sequence");
  Tms out(y.n, y.degree - g.degree());
  const IndexTable& table = y.table();
  const IndexTable& small = out.table();
  for (std::size_t r = 0; r < small.size(); ++r) {
    double s = 0;
    bool known = true;
    for (const auto& [gamma, c] : g.terms()) {
      const int k = table.rank(small.index(r) + gamma);
      s += c * y.y[k];
      known = known && y.known[k];
    }
    out.y[r] = s;
    out.known[r] = known;
  }
  return out;
}

/// M_t(g * y), defined when 2t + deg(g) <= degree(y).
inline RMatrix localizing_matrix(const RealPolynomial& g, const Tms& y, int t) {
  detail::require_degree(y, 2 * t + g.degree(), "localizing_matrix");
  return moment_matrix(shifted_sequence(g, y), t);
}

// ---------------------------------------------------------------------------
// Atomic measures

struct Atom {
  double weight;
  std::vector<double> point;
};

inline double monomial(const std::vector<double>& x, const MultiIndex& a) {
  double m = 1;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (int p = 0; p < a[i]; ++p) m *= x[i];
  return m;
}

/// y_alpha = sum_k w_k x_k^alpha.
inline Tms tms_from_atoms(const std::vector<Atom>& atoms, int n, int degree) {
  Tms y(n, degree);
  const IndexTable& table = y.table();
  for (const auto& at : atoms) {
    if (!(at.weight > 0)) throw Error("tms_from_atoms: weights must be positive");
    if (static_cast<int>(at.point.size()) != n) throw DimensionError("tms_from_atoms: atom has wrong length");
  }
  for (std::size_t r = 0; r < table.size(); ++r) {
    double s = 0;
    for (const auto& at : atoms) s += at.weight * monomial(at.point, table.index(r));
    y.y[r] = s;
  }
  std::fill(y.known.begin(), y.known.end(), 1);
  return y;
}

// ---------------------------------------------------------------------------
// Cuts

enum class CutKind { EB, SEP, FS };

inline std::string to_string(CutKind c) {
  switch (c) {
    case CutKind::EB: return "eb";
    case CutKind::SEP: return "sep";
    case CutKind::FS: return "fs";
  }
  return "?";
}

inline CutKind cut_kind_from_string(const std::string& s) {
  if (s == "eb" || s == "EB") return CutKind::EB;
  if (s == "sep" || s == "SEP") return CutKind::SEP;
  if (s == "fs" || s == "FS") return CutKind::FS;
  throw Error("unknown cut '" + s + "' (expected eb, sep or fs)");
}

/// How the factors of a Choi state are grouped into separable parties.
///
/// The Choi state of a channel on dims (d_1..d_k) has factors
/// (out_1..out_k, in_1..in_k); for a two-qubit channel that is
/// (A, B, A', B'). EB groups outputs against inputs, SEP groups (A, A')
/// against (B, B'), FS separates every factor. With `symmetric` set, all FS
/// parties share one set of variables (permutation-symmetric states).
struct CutSpec {
  CutKind kind = CutKind::EB;
  SubsystemShape shape;
  std::vector<OperatorBasis> bases;
  std::vector<std::vector<int>> groups;
  bool symmetric = false;

  int num_groups() const { return static_cast<int>(groups.size()); }

  std::vector<OperatorBasis> group_bases(int g) const {
    std::vector<OperatorBasis> out;
    for (int f : groups.at(g)) out.push_back(bases[f]);
    return out;
  }

  int group_vars(int g) const { return side_num_vars(group_bases(g)); }

  int group_offset(int g) const {
    if (symmetric) return 0;
    int off = 0;
    for (int h = 0; h < g; ++h) off += group_vars(h);
    return off;
  }

  int num_vars() const {
    if (symmetric) return group_vars(0);
    int n = 0;
    for (int g = 0; g < num_groups(); ++g) n += group_vars(g);
    return n;
  }

  /// Degree of the data moments: one factor per party.
  int tms_degree() const { return num_groups(); }
};

/// Builds the cut for a Choi state over `shape`, one basis per factor (or
/// the default basis for each factor when `bases` is empty).
inline CutSpec make_cut(CutKind kind, const SubsystemShape& shape, std::vector<OperatorBasis> bases = {},
                        bool symmetric = false) {
  const int f = static_cast<int>(shape.size());
  if (f < 2 || f % 2 != 0) throw DimensionError("a Choi state has an even number (>= 2) of factors");
  if (bases.empty()) {
    for (int d : shape.dims()) bases.push_back(default_basis(d));
  }
  if (static_cast<int>(bases.size()) != f) throw DimensionError("make_cut: one basis per factor required");
  for (int k = 0; k < f; ++k) {
    if (bases[k].dim != shape.factor(k)) throw DimensionError("make_cut: basis dimension does not match factor");
  }
  CutSpec c{kind, shape, std::move(bases), {}, symmetric};
  const int half = f / 2;
  switch (kind) {
    case CutKind::EB: {
      std::vector<int> out, in;
      for (int k = 0; k < half; ++k) {
        out.push_back(k);
        in.push_back(half + k);
      }
      c.groups = {out, in};
      break;
    }
    case CutKind::SEP:
      if (f != 4) {
        throw Error("the SEP cut needs a bipartite system (channel on two factors); use eb or fs instead");
      }
      c.groups = {{0, 2}, {1, 3}};
      break;
    case CutKind::FS:
      for (int k = 0; k < f; ++k) c.groups.push_back({k});
      break;
  }
  if (symmetric) {
    if (kind != CutKind::FS) throw Error("symmetric reduction applies to the fs cut only");
    for (int k = 1; k < f; ++k) {
      if (c.bases[k].kind != c.bases[0].kind || c.bases[k].dim != c.bases[0].dim) {
        throw Error("symmetric reduction needs identical factor bases");
      }
    }
  }
  if (c.num_groups() % 2 != 0) throw Error("odd number of parties leaves top-degree moments unspecified");
  return c;
}

/// Factor shape of the Choi state of a channel on `dims`.
inline SubsystemShape choi_shape(const SubsystemShape& dims) {
  std::vector<int> d = dims.dims();
  d.insert(d.end(), dims.dims().begin(), dims.dims().end());
  return SubsystemShape(std::move(d));
}

/// Party variables for each product-basis index of the Choi expansion:
/// returns alpha for coordinate multi-index mu.
inline MultiIndex coordinate_monomial(const CutSpec& cut, const std::vector<int>& mu) {
  MultiIndex a(cut.num_vars(), 0);
  for (int g = 0; g < cut.num_groups(); ++g) {
    int s = 0;
    for (int f : cut.groups[g]) s = s * cut.bases[f].size() + mu[f];
    if (s != 0) a[cut.group_offset(g) + s - 1] += 1;
  }
  return a;
}

/// Maps the Choi coordinates X_mu onto y_alpha. For the symmetric cut,
/// coordinates sharing a monomial are averaged and their spread is stored
/// in `max_inconsistency` (zero for a genuinely symmetric state).
inline Tms tms_from_choi(const HermitianMatrix& choi_state, const CutSpec& cut, double* max_inconsistency = nullptr) {
  cut.shape.check_matches(choi_state.dim());
  if (std::abs(choi_state.trace() - 1.0) > 1e-10) {
    throw Error("tms_from_choi expects a unit-trace Choi state (trace " + std::to_string(choi_state.trace()) + ")");
  }
  const CoordinateTensor x = expand(choi_state, cut.bases);
  Tms y(cut.num_vars(), cut.tms_degree());
  const IndexTable& table = y.table();
  std::vector<double> lo(y.y.size(), 0), hi(y.y.size(), 0);
  std::vector<int> count(y.y.size(), 0);
  std::vector<int> mu;
  for (int flat = 0; flat < static_cast<int>(x.values.size()); ++flat) {
    detail::unflatten(flat, x.dims, mu);
    const int r = table.rank(coordinate_monomial(cut, mu));
    const double v = x.values[flat];
    if (count[r] == 0) {
      lo[r] = hi[r] = v;
    } else {
      lo[r] = std::min(lo[r], v);
      hi[r] = std::max(hi[r], v);
    }
    y.y[r] += v;
    ++count[r];
  }
  double spread = 0;
  for (std::size_t r = 0; r < y.y.size(); ++r) {
    if (count[r] == 0) continue;
    y.y[r] /= count[r];
    y.known[r] = 1;
    spread = std::max(spread, hi[r] - lo[r]);
  }
  if (max_inconsistency) *max_inconsistency = spread;
  return y;
}

/// One constraint set per party (a single shared one for symmetric cuts),
/// embedded in the full variable space.
inline SemialgebraicSet cut_constraint_set(const CutSpec& cut) {
  if (cut.symmetric) return positivity_set(cut.group_bases(0));
  std::vector<SemialgebraicSet> parts;
  for (int g = 0; g < cut.num_groups(); ++g) parts.push_back(positivity_set(cut.group_bases(g)));
  return product_set(parts);
}

}  // namespace choicert
