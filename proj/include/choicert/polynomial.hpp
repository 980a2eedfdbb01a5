#pragma once

// Sparse multivariate polynomials over a scalar field.

#include "choicert/multi_index.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace choicert {

template <typename T>
class Polynomial {
 public:
  using Terms = std::map<MultiIndex, T, GrlexLess>;

  Polynomial() = default;
  explicit Polynomial(int n) : n_(n) {}

  static Polynomial constant(int n, T c) {
    Polynomial p(n);
    p.add_term(MultiIndex(n, 0), c);
    return p;
  }

  static Polynomial variable(int n, int var, T c = T(1)) {
    Polynomial p(n);
    p.add_term(unit_index(n, var), c);
    return p;
  }

  int num_vars() const { return n_; }
  const Terms& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  int degree() const {
    // grlex keeps the highest degree last
    return terms_.empty() ? 0 : choicert::degree(terms_.rbegin()->first);
  }

  T coefficient(const MultiIndex& a) const {
    auto it = terms_.find(a);
    return it == terms_.end() ? T(0) : it->second;
  }

  void add_term(const MultiIndex& a, T c) {
    if (static_cast<int>(a.size()) != n_) throw std::invalid_argument("monomial arity mismatch");
    if (c == T(0)) return;
    auto [it, inserted] = terms_.try_emplace(a, c);
    if (!inserted) {
      it->second += c;
      if (it->second == T(0)) terms_.erase(it);
    }
  }

  Polynomial& operator+=(const Polynomial& o) {
    check_arity(o);
    for (const auto& [a, c] : o.terms_) add_term(a, c);
    return *this;
  }

  Polynomial& operator-=(const Polynomial& o) {
    check_arity(o);
    for (const auto& [a, c] : o.terms_) add_term(a, -c);
    return *this;
  }

  Polynomial& operator*=(T s) {
    if (s == T(0)) {
      terms_.clear();
      return *this;
    }
    for (auto& kv : terms_) kv.second *= s;
    return *this;
  }

  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator*(Polynomial a, T s) { return a *= s; }
  friend Polynomial operator*(T s, Polynomial a) { return a *= s; }

  friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    a.check_arity(b);
    Polynomial out(a.n_);
    for (const auto& [ea, ca] : a.terms_) {
      for (const auto& [eb, cb] : b.terms_) out.add_term(ea + eb, ca * cb);
    }
    return out;
  }

  template <typename Vec>
  T eval(const Vec& x) const {
    if (static_cast<int>(x.size()) != n_) throw std::invalid_argument("eval: point has wrong length");
    T sum(0);
    for (const auto& [a, c] : terms_) {
      T m = c;
      for (int i = 0; i < n_; ++i) {
        for (int p = 0; p < a[i]; ++p) m *= x[i];
      }
      sum += m;
    }
    return sum;
  }

  /// Drops terms whose magnitude is below rel * (largest magnitude).
  Polynomial& prune(double rel) {
    double big = 0;
    for (const auto& kv : terms_) big = std::max(big, static_cast<double>(std::abs(kv.second)));
    for (auto it = terms_.begin(); it != terms_.end();) {
      if (std::abs(it->second) <= rel * big) {
        it = terms_.erase(it);
      } else {
        ++it;
      }
    }
    return *this;
  }

  /// Relabels variables into a larger space: variable i becomes offset + i.
  Polynomial embed(int total_vars, int offset) const {
    if (offset < 0 || offset + n_ > total_vars) throw std::invalid_argument("embed: range out of bounds");
    Polynomial out(total_vars);
    for (const auto& [a, c] : terms_) {
      MultiIndex b(total_vars, 0);
      for (int i = 0; i < n_; ++i) b[offset + i] = a[i];
      out.add_term(b, c);
    }
    return out;
  }

  /// Human-readable monomial list such as "1 - x1^2 - x2^2".
  std::string to_string() const {
    if (terms_.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (const auto& [a, c] : terms_) {
      os << (first ? "" : " + ") << '(' << c << ')';
      for (int i = 0; i < n_; ++i) {
        if (a[i] == 0) continue;
        os << "*x" << (i + 1);
        if (a[i] > 1) os << '^' << a[i];
      }
      first = false;
    }
    return os.str();
  }

 private:
  void check_arity(const Polynomial& o) const {
    if (o.n_ != n_) throw std::invalid_argument("polynomials over different variable counts");
  }

  int n_ = 0;
  Terms terms_;
};

using RealPolynomial = Polynomial<double>;
using ComplexPolynomial = Polynomial<std::complex<double>>;

/// Real part of a polynomial with complex coefficients; imaginary parts
/// must vanish up to `tol` relative to the largest coefficient.
inline RealPolynomial real_part(const ComplexPolynomial& p, double tol = 1e-9) {
  RealPolynomial out(p.num_vars());
  double big = 0;
  for (const auto& kv : p.terms()) big = std::max(big, std::abs(kv.second));
  for (const auto& [a, c] : p.terms()) {
    if (std::abs(c.imag()) > tol * std::max(1.0, big)) {
      throw std::domain_error("polynomial has a non-negligible imaginary part");
    }
    out.add_term(a, c.real());
  }
  return out;
}

inline double eval_poly(const RealPolynomial& g, const std::vector<double>& x) { return g.eval(x); }

}  // namespace choicert
