#pragma once

// Exponent multi-indices in graded lexicographic order and the shared rank
// tables used to address moment vectors.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace choicert {

using MultiIndex = std::vector<int>;

inline int degree(const MultiIndex& a) { return std::accumulate(a.begin(), a.end(), 0); }

inline MultiIndex operator+(const MultiIndex& a, const MultiIndex& b) {
  MultiIndex c(a);
  for (std::size_t i = 0; i < c.size(); ++i) c[i] += b[i];
  return c;
}

inline MultiIndex unit_index(int n, int var) {
  MultiIndex a(n, 0);
  a.at(var) = 1;
  return a;
}

/// Graded lexicographic order: lower total degree first, then x1 > x2 > ...
/// within a degree, so that 1, x1, x2, x1^2, x1 x2, x2^2, ... is ascending.
struct GrlexLess {
  bool operator()(const MultiIndex& a, const MultiIndex& b) const {
    const int da = degree(a), db = degree(b);
    if (da != db) return da < db;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i] != b[i]) return a[i] > b[i];
    }
    return false;
  }
};

struct MultiIndexHash {
  std::size_t operator()(const MultiIndex& a) const noexcept {
    std::size_t h = 1469598103934665603ULL;
    for (int v : a) {
      h ^= static_cast<std::size_t>(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return h;
  }
};

/// Binomial coefficient with overflow-free incremental evaluation.
inline std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

/// Number of n-variate multi-indices of degree at most d: C(n+d, d).
inline std::uint64_t count_indices(int n, int d) {
  return binomial(static_cast<std::uint64_t>(n + d), static_cast<std::uint64_t>(d));
}

namespace detail {

inline void compositions(int n, int k, std::size_t pos, MultiIndex& cur, std::vector<MultiIndex>& out) {
  if (pos + 1 == static_cast<std::size_t>(n)) {
    cur[pos] = k;
    out.push_back(cur);
    return;
  }
  for (int v = k; v >= 0; --v) {
    cur[pos] = v;
    compositions(n, k - v, pos + 1, cur, out);
  }
  cur[pos] = 0;
}

}  // namespace detail

/// All n-variate multi-indices with |a| <= max_degree, ascending in grlex.
inline std::vector<MultiIndex> enumerate_indices(int n, int max_degree) {
  if (n < 1) throw std::invalid_argument("enumerate_indices: need at least one variable");
  if (max_degree < 0) throw std::invalid_argument("enumerate_indices: negative degree");
  std::vector<MultiIndex> out;
  out.reserve(count_indices(n, max_degree));
  MultiIndex cur(n, 0);
  for (int k = 0; k <= max_degree; ++k) detail::compositions(n, k, 0, cur, out);
  return out;
}

/// Grlex-ranked multi-indices of n variables up to a maximal degree.
///
/// Moment vectors are flat arrays addressed by these ranks. Because the
/// order is graded, the indices of degree <= k form the prefix of length
/// C(n+k, k) for every k <= max_degree.
class IndexTable {
 public:
  IndexTable(int n, int max_degree) : n_(n), max_degree_(max_degree), indices_(enumerate_indices(n, max_degree)) {
    rank_.reserve(indices_.size());
    for (std::size_t i = 0; i < indices_.size(); ++i) rank_.emplace(indices_[i], static_cast<int>(i));
  }

  int num_vars() const { return n_; }
  int max_degree() const { return max_degree_; }
  std::size_t size() const { return indices_.size(); }
  const MultiIndex& index(std::size_t r) const { return indices_[r]; }
  const std::vector<MultiIndex>& indices() const { return indices_; }

  /// Number of indices of degree at most k.
  std::size_t prefix(int k) const { return static_cast<std::size_t>(count_indices(n_, k)); }

  int rank(const MultiIndex& a) const {
    auto it = rank_.find(a);
    if (it == rank_.end()) throw std::out_of_range("multi-index outside the table");
    return it->second;
  }

  bool contains(const MultiIndex& a) const { return rank_.count(a) != 0; }

  /// Shared, immutable table for (n, max_degree).
  static std::shared_ptr<const IndexTable> get(int n, int max_degree) {
    static std::mutex mu;
    static std::map<std::pair<int, int>, std::shared_ptr<const IndexTable>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[{n, max_degree}];
    if (!slot) slot = std::make_shared<const IndexTable>(n, max_degree);
    return slot;
  }

 private:
  int n_;
  int max_degree_;
  std::vector<MultiIndex> indices_;
  std::unordered_map<MultiIndex, int, MultiIndexHash> rank_;
};

}  // namespace choicert
