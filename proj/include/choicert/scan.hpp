#pragma once

// Parameter scans over the built-in channel families: CP flag, negativity
// and optionally a certification verdict per grid point. Points run on a
// worker pool; rows are emitted strictly in grid order.

#include "choicert/channels.hpp"
#include "choicert/io.hpp"
#include "choicert/relax.hpp"

#include <atomic>
#include <condition_variable>
#include <functional>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <thread>

namespace choicert {

enum class Family { QutritDamping, PlanarPair, OneQubit };

inline Family family_from_string(const std::string& s) {
  if (s == "qutrit_damping") return Family::QutritDamping;
  if (s == "planar_pair") return Family::PlanarPair;
  if (s == "one_qubit") return Family::OneQubit;
  throw Error("unknown family '" + s + "' (expected qutrit_damping, planar_pair or one_qubit)");
}

inline std::string to_string(Family f) {
  switch (f) {
    case Family::QutritDamping: return "qutrit_damping";
    case Family::PlanarPair: return "planar_pair";
    case Family::OneQubit: return "one_qubit";
  }
  return "?";
}

/// Parameter names of a family, in CSV column order, with default values.
inline std::vector<std::pair<std::string, double>> family_parameters(Family f) {
  switch (f) {
    case Family::QutritDamping: return {{"x", 0.0}, {"y", 0.0}};
    case Family::OneQubit: return {{"l1", 1.0}, {"l2", 1.0}, {"l3", 1.0}, {"t1", 0.0}, {"t2", 0.0}, {"t3", 0.0}};
    case Family::PlanarPair:
      return {{"a", 1.0 / 32},  {"p1_l1", 0.0}, {"p1_l3", 0.0}, {"p1_t1", 0.0}, {"p1_t3", 0.0},
              {"p2_l1", 0.0},   {"p2_l3", 0.0}, {"p2_t1", 0.0}, {"p2_t3", 0.0}};
  }
  return {};
}

/// One family member: its Choi state (unit trace, possibly not PSD), the
/// channel dimensions and the factors transposed for the negativity.
struct FamilyMember {
  Family family;
  std::vector<double> params;
  SubsystemShape channel_dims;
  HermitianMatrix choi_state;
  std::set<int> transposed;
  double min_eigenvalue = 0;
  bool cp = false;

  Channel channel() const {
    const int n = channel_dims.total();
    return Channel::from_choi(channel_dims, choi_state * static_cast<double>(n));
  }
  Json params_json() const {
    Json j = Json::object();
    const auto names = family_parameters(family);
    for (std::size_t i = 0; i < names.size(); ++i) j[names[i].first] = params[i];
    return j;
  }
  /// The cut used when a scan certifies: EB for one-qubit and qutrit
  /// channels, FS over {1, x, z} for planar pairs.
  CutSpec default_cut() const {
    const SubsystemShape shape = choi_shape(channel_dims);
    if (family == Family::PlanarPair) {
      const OperatorBasis pl = make_basis(BasisKind::PauliPlanar, 2);
      return make_cut(CutKind::FS, shape, {pl, pl, pl, pl});
    }
    return make_cut(CutKind::EB, shape);
  }
};

inline constexpr double kCpTolerance = 1e-12;

/// `values` are in family_parameters order.
inline FamilyMember make_family_member(Family f, const std::vector<double>& values) {
  const auto names = family_parameters(f);
  if (values.size() != names.size()) throw DimensionError("wrong number of family parameters");
  auto finish = [&](SubsystemShape dims, HermitianMatrix state, std::set<int> transposed) {
    const double lmin = state.eigenvalues()(0);
    return FamilyMember{f, values, std::move(dims), std::move(state), std::move(transposed), lmin,
                        lmin >= -kCpTolerance};
  };
  switch (f) {
    case Family::QutritDamping: {
      QutritDamping q = qutrit_damping({values[0], values[1]});
      return finish(SubsystemShape({3}), q.choi_state, {1});
    }
    case Family::OneQubit: {
      OneQubitChannelParams p;
      p.lambda = {values[0], values[1], values[2]};
      p.t = {values[3], values[4], values[5]};
      return finish(SubsystemShape({2}), one_qubit_channel(p).choi_state(), {1});
    }
    case Family::PlanarPair: {
      OneQubitChannelParams p1, p2;
      p1.lambda = {values[1], 0, values[2]};
      p1.t = {values[3], 0, values[4]};
      p2.lambda = {values[5], 0, values[6]};
      p2.t = {values[7], 0, values[8]};
      HermitianMatrix st = planar_pair_channel(values[0], p1, p2, std::numeric_limits<double>::infinity());
      return finish(SubsystemShape({2, 2}), std::move(st), {2, 3});
    }
  }
  throw Error("unknown family");
}

/// Builds a member from name=value pairs; unnamed parameters keep defaults.
inline FamilyMember make_family_member(Family f, const std::map<std::string, double>& named) {
  const auto names = family_parameters(f);
  std::vector<double> values;
  for (const auto& [name, def] : names) {
    auto it = named.find(name);
    values.push_back(it == named.end() ? def : it->second);
  }
  for (const auto& [name, v] : named) {
    bool known = false;
    for (const auto& p : names) known = known || p.first == name;
    if (!known) throw Error("family " + to_string(f) + " has no parameter '" + name + "'");
  }
  return make_family_member(f, values);
}

// ---------------------------------------------------------------------------
// Grids

struct ParamRange {
  std::string name;
  double lo = 0;
  double hi = 0;
  int steps = 1;

  double value(int k) const { return steps == 1 ? lo : lo + (hi - lo) * k / (steps - 1); }
};

/// "name=lo:hi:steps" or "name=value".
inline ParamRange parse_param_range(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0) throw Error("parameter '" + spec + "' must look like name=lo:hi:steps");
  ParamRange r;
  r.name = spec.substr(0, eq);
  std::vector<std::string> parts;
  std::stringstream ss(spec.substr(eq + 1));
  for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
  try {
    if (parts.size() == 1) {
      r.lo = r.hi = std::stod(parts[0]);
    } else if (parts.size() == 3) {
      r.lo = std::stod(parts[0]);
      r.hi = std::stod(parts[1]);
      r.steps = std::stoi(parts[2]);
    } else {
      throw Error("bad count");
    }
  } catch (const std::exception&) {
    throw Error("parameter '" + spec + "' must look like name=lo:hi:steps or name=value");
  }
  if (r.steps < 1) throw Error("parameter '" + r.name + "': steps must be positive");
  if (r.steps > 1 && !(r.hi > r.lo)) throw Error("parameter '" + r.name + "': empty range (hi must exceed lo)");
  return r;
}

struct ScanSpec {
  Family family = Family::QutritDamping;
  std::vector<ParamRange> ranges;
  bool certify = false;
  /// Cut override for certification; the family default otherwise.
  std::optional<CutKind> cut;
  CertifyOptions certify_options;
  int jobs = 1;
};

struct ScanRow {
  std::vector<double> params;
  bool cp = false;
  double negativity = 0;
  std::optional<Verdict> verdict;
  int order = 0;
  double seconds = 0;
  std::string error;
};

/// Grid size; validates parameter names.
inline std::size_t scan_size(const ScanSpec& spec) {
  const auto names = family_parameters(spec.family);
  std::set<std::string> seen;
  std::size_t total = 1;
  for (const auto& r : spec.ranges) {
    bool known = false;
    for (const auto& p : names) known = known || p.first == r.name;
    if (!known) throw Error("family " + to_string(spec.family) + " has no parameter '" + r.name + "'");
    if (!seen.insert(r.name).second) throw Error("parameter '" + r.name + "' given twice");
    total *= static_cast<std::size_t>(r.steps);
  }
  return total;
}

/// Parameter vector of grid point `index`; the first range varies slowest.
inline std::vector<double> scan_point(const ScanSpec& spec, std::size_t index) {
  const auto names = family_parameters(spec.family);
  std::vector<double> values;
  for (const auto& p : names) values.push_back(p.second);
  for (std::size_t r = spec.ranges.size(); r-- > 0;) {
    const auto& range = spec.ranges[r];
    const int k = static_cast<int>(index % range.steps);
    index /= range.steps;
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (names[i].first == range.name) values[i] = range.value(k);
    }
  }
  return values;
}

inline ScanRow evaluate_point(const ScanSpec& spec, std::size_t index) {
  const auto start = std::chrono::steady_clock::now();
  ScanRow row;
  row.params = scan_point(spec, index);
  try {
    const FamilyMember m = make_family_member(spec.family, row.params);
    row.cp = m.cp;
    row.negativity = negativity(m.choi_state, choi_shape(m.channel_dims), m.transposed);
    if (spec.certify && m.cp) {
      CutSpec cut = m.default_cut();
      if (spec.cut) cut = make_cut(*spec.cut, cut.shape, cut.bases);
      const Certificate c = certify(m.choi_state, cut, spec.certify_options);
      row.verdict = c.verdict;
      row.order = c.order;
    }
  } catch (const Error& e) {
    row.error = e.what();
  }
  row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return row;
}

inline std::string scan_header(Family f) {
  std::string h;
  for (const auto& p : family_parameters(f)) h += p.first + ",";
  return h + "cp,negativity,verdict,order,seconds";
}

inline std::string format_row(const ScanRow& r) {
  std::string s;
  for (double v : r.params) s += format_number(v) + ",";
  s += std::string(r.cp ? "1" : "0") + "," + format_number(r.negativity) + "," + verdict_code(r.verdict) + ",";
  s += (r.verdict ? std::to_string(r.order) : std::string("-")) + ",";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", r.seconds);
  return s + buf;
}

/// Runs the grid on spec.jobs workers and hands rows to `sink` in grid
/// order as soon as each prefix is complete.
inline void run_scan(const ScanSpec& spec, const std::function<void(std::size_t, const ScanRow&)>& sink) {
  const std::size_t total = scan_size(spec);
  const int jobs = std::max(1, std::min<int>(spec.jobs, static_cast<int>(std::max<std::size_t>(total, 1))));
  std::vector<std::optional<ScanRow>> done(total);
  std::mutex mu;
  std::condition_variable cv;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < total;) {
      ScanRow row = evaluate_point(spec, i);
      {
        std::lock_guard<std::mutex> lock(mu);
        done[i] = std::move(row);
      }
      cv.notify_one();
    }
  };
  std::vector<std::thread> pool;
  for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
  for (std::size_t i = 0; i < total; ++i) {
    std::unique_lock<std::mutex> lock(mu);
    cv.wait(lock, [&] { return done[i].has_value(); });
    ScanRow row = std::move(*done[i]);
    done[i].reset();
    lock.unlock();
    sink(i, row);
  }
  for (auto& t : pool) t.join();
}

/// CSV to `out`; returns the rows for callers that inspect them.
inline std::vector<ScanRow> write_scan_csv(const ScanSpec& spec, std::ostream& out) {
  std::vector<ScanRow> rows;
  out << scan_header(spec.family) << "\n";
  run_scan(spec, [&](std::size_t, const ScanRow& r) {
    out << format_row(r) << "\n";
    out.flush();
    rows.push_back(r);
  });
  return rows;
}

}  // namespace choicert
