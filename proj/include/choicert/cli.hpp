#pragma once

// Command-line surface. run_cli parses arguments and dispatches to the
// library; tools/choicert.cpp only forwards main() here, so tests drive the
// exact same code with string streams.
//
// Exit codes: 0 separable (or a successful non-certifying command), 1
// entangled, 2 inconclusive, 64 usage, 65 bad data or refused channel, 66
// unreadable input, 70 internal failure.

#include "choicert/io.hpp"
#include "choicert/scan.hpp"

#include "CLI11.hpp"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>

namespace choicert::cli {

enum ExitCode : int {
  kSeparable = 0,
  kEntangled = 1,
  kInconclusive = 2,
  kUsage = 64,
  kDataError = 65,
  kNoInput = 66,
  kInternal = 70,
};

inline int exit_code(Verdict v) {
  switch (v) {
    case Verdict::Separable: return kSeparable;
    case Verdict::Entangled: return kEntangled;
    case Verdict::Inconclusive: return kInconclusive;
  }
  return kInternal;
}

// ---------------------------------------------------------------------------
// Settings shared by flags, CHOICERT_* variables and the JSON config file.

struct Settings {
  std::string backend = "ipm";
  double tol = 1e-6;
  int jobs = 1;
  int max_order = 3;
  std::string objective = "trace";
  std::uint64_t seed = 1;
  int retries = 1;
};

/// Values given explicitly on the command line.
struct SettingOverrides {
  std::optional<std::string> backend;
  std::optional<double> tol;
  std::optional<int> jobs;
  std::optional<int> max_order;
  std::optional<std::string> objective;
  std::optional<std::uint64_t> seed;
  std::optional<int> retries;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

inline std::optional<std::string> process_env(const std::string& name) {
  const char* v = std::getenv(name.c_str());
  if (v == nullptr) return std::nullopt;
  return std::string(v);
}

namespace detail {

inline double parse_double(const std::string& what, const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(what + ": expected a number, got '" + s + "'");
}

inline int parse_int(const std::string& what, const std::string& s) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(what + ": expected an integer, got '" + s + "'");
}

template <class T>
T config_value(const Json& config, const char* key) {
  try {
    return config.at(key).get<T>();
  } catch (const Json::exception&) {
    throw Error(std::string("config: bad value for \"") + key + "\"");
  }
}

}  // namespace detail

inline Json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config '" + path + "'");
  Json j;
  try {
    in >> j;
  } catch (const Json::parse_error& e) {
    throw Error("malformed JSON in config '" + path + "': " + e.what());
  }
  if (!j.is_object()) throw Error("config must be a JSON object");
  return j;
}

/// Flags win over CHOICERT_BACKEND / CHOICERT_TOL / CHOICERT_JOBS, which win
/// over the config file, which wins over the built-in defaults. Keys without
/// an environment variable (max_order, objective, seed, retries) come from
/// flags or config.
inline Settings resolve_settings(const SettingOverrides& flags, const Json& config, const EnvLookup& env) {
  static const std::set<std::string> known{"backend", "tol", "jobs", "max_order", "objective", "seed", "retries"};
  for (const auto& [key, value] : config.items()) {
    if (!known.count(key)) throw Error("config: unknown key \"" + key + "\"");
  }
  Settings s;
  if (config.contains("backend")) s.backend = detail::config_value<std::string>(config, "backend");
  if (config.contains("tol")) s.tol = detail::config_value<double>(config, "tol");
  if (config.contains("jobs")) s.jobs = detail::config_value<int>(config, "jobs");
  if (config.contains("max_order")) s.max_order = detail::config_value<int>(config, "max_order");
  if (config.contains("objective")) s.objective = detail::config_value<std::string>(config, "objective");
  if (config.contains("seed")) s.seed = detail::config_value<std::uint64_t>(config, "seed");
  if (config.contains("retries")) s.retries = detail::config_value<int>(config, "retries");

  if (auto v = env("CHOICERT_BACKEND")) s.backend = *v;
  if (auto v = env("CHOICERT_TOL")) s.tol = detail::parse_double("CHOICERT_TOL", *v);
  if (auto v = env("CHOICERT_JOBS")) s.jobs = detail::parse_int("CHOICERT_JOBS", *v);

  if (flags.backend) s.backend = *flags.backend;
  if (flags.tol) s.tol = *flags.tol;
  if (flags.jobs) s.jobs = *flags.jobs;
  if (flags.max_order) s.max_order = *flags.max_order;
  if (flags.objective) s.objective = *flags.objective;
  if (flags.seed) s.seed = *flags.seed;
  if (flags.retries) s.retries = *flags.retries;

  if (!(s.tol > 0 && s.tol < 1)) throw Error("tol must lie in (0, 1)");
  if (s.jobs < 1) throw Error("jobs must be positive");
  if (s.max_order < 1) throw Error("max_order must be positive");
  if (s.retries < 0) throw Error("retries must be non-negative");
  objective_kind_from_string(s.objective);
  return s;
}

inline CertifyOptions certify_options(const Settings& s) {
  CertifyOptions o;
  o.backend = s.backend;
  o.rank_tolerance = s.tol;
  o.max_order = s.max_order;
  o.objective = objective_kind_from_string(s.objective);
  o.seed = s.seed;
  o.random_retries = s.retries;
  return o;
}

// ---------------------------------------------------------------------------
// Inputs

/// The unit-trace Choi state to analyse and its factor shape. Channel files
/// are checked for CP and TP first; a failing channel is refused.
struct Subject {
  HermitianMatrix state;
  SubsystemShape shape;
  bool from_channel = false;
};

class Refused : public Error {
 public:
  Refused(const std::string& what, Json report) : Error(what), report_(std::move(report)) {}
  const Json& report() const { return report_; }

 private:
  Json report_;
};

inline Subject subject_from_file(const ChannelFile& f) {
  if (f.is_state()) {
    const HermitianMatrix& rho = *f.state;
    const double lmin = rho.eigenvalues()(0);
    if (std::abs(rho.trace() - 1.0) > 1e-9 || lmin < -1e-9) {
      throw Refused("state is not a density matrix", {{"trace", rho.trace()}, {"min_eigenvalue", lmin}});
    }
    return {rho, f.dims, false};
  }
  const ChannelReport rep = check_channel(*f.channel);
  if (!rep.cp || !rep.tp) {
    throw Refused(std::string("channel is not ") + (!rep.cp ? "completely positive" : "trace preserving"),
                  report_to_json(rep));
  }
  return {f.channel->choi_state(), choi_shape(f.dims), true};
}

inline std::vector<OperatorBasis> bases_for(const SubsystemShape& shape, const std::string& basis) {
  std::vector<OperatorBasis> out;
  for (int d : shape.dims()) out.push_back(basis.empty() ? default_basis(d) : make_basis(basis, d));
  return out;
}

/// Factor list "1,3" -> {1, 3}, checked against the shape.
inline std::set<int> parse_factor_list(const std::string& s, const SubsystemShape& shape) {
  std::set<int> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    const int k = detail::parse_int("--cut", item);
    if (k < 0 || k >= static_cast<int>(shape.size())) {
      throw Error("--cut: factor " + item + " out of range (state has " + std::to_string(shape.size()) + " factors)");
    }
    out.insert(k);
  }
  if (out.empty()) throw Error("--cut: empty factor list");
  return out;
}

inline std::map<std::string, double> parse_named_params(const std::vector<std::string>& items) {
  std::map<std::string, double> out;
  for (const auto& p : items) {
    const auto eq = p.find('=');
    if (eq == std::string::npos || eq == 0) throw Error("--param expects name=value, got '" + p + "'");
    out[p.substr(0, eq)] = detail::parse_double("--param " + p.substr(0, eq), p.substr(eq + 1));
  }
  return out;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw Error("cannot write '" + path + "'");
  f << text;
}

// ---------------------------------------------------------------------------
// Commands

struct CertifyArgs {
  std::string file;
  std::string cut = "eb";
  bool symmetric = false;
  std::string basis;
  bool dry_run = false;
  bool dump_tms = false;
  std::string out;
};

/// Dimensions of the first relaxation order for `state`, without solving.
inline RelaxationStats dry_run_stats(const HermitianMatrix& state, const CutSpec& cut) {
  const Tms data = tms_from_choi(state, cut);
  const SemialgebraicSet k = cut_constraint_set(cut);
  return relaxation_stats(data, k, std::max(1, (data.degree + 1) / 2));
}

inline int cmd_certify(const CertifyArgs& a, const Settings& s, std::ostream& out) {
  const Subject subj = subject_from_file(load_channel_file(a.file));
  const CutSpec cut = make_cut(cut_kind_from_string(a.cut), subj.shape, bases_for(subj.shape, a.basis), a.symmetric);
  if (a.dump_tms) {
    const Tms data = tms_from_choi(subj.state, cut);
    Json moments = Json::array();
    for (std::size_t i = 0; i < data.y.size(); ++i) {
      if (data.known[i]) moments.push_back(Json::array({data.table().index(i), data.y[i]}));
    }
    out << Json{{"n", data.n}, {"degree", data.degree}, {"moments", moments}}.dump(2) << "\n";
  }
  if (a.dry_run) {
    Json j = stats_to_json(dry_run_stats(subj.state, cut));
    j["cut"] = to_string(cut.kind);
    out << j.dump(2) << "\n";
    if (!a.out.empty()) write_text(a.out, j.dump(2) + "\n");
    return kSeparable;
  }
  const Certificate c = certify(subj.state, cut, certify_options(s));
  const std::string text = certificate_to_json(c, cut).dump(2) + "\n";
  out << text;
  if (!a.out.empty()) write_text(a.out, text);
  return exit_code(c.verdict);
}

inline int cmd_negativity(const std::string& file, const std::string& cut_list, std::ostream& out) {
  const ChannelFile f = load_channel_file(file);
  const Subject subj = subject_from_file(f);
  std::set<int> transposed;
  if (!cut_list.empty()) {
    transposed = parse_factor_list(cut_list, subj.shape);
  } else {
    const int nf = static_cast<int>(subj.shape.size());
    for (int k = nf / 2; k < nf; ++k) transposed.insert(k);
    if (nf == 1) throw Error("negativity needs at least two factors");
  }
  const double n = negativity(subj.state, subj.shape, transposed);
  out << Json{{"negativity", n}, {"ppt", n <= 1e-12}, {"transposed_factors", transposed}}.dump(2) << "\n";
  return kSeparable;
}

inline int cmd_choi(const std::string& file, bool check, bool symmetric_check, std::ostream& out) {
  const ChannelFile f = load_channel_file(file);
  if (f.is_state()) throw Error("choi expects a channel file, not a state");
  Json j;
  j["dims"] = f.dims.dims();
  j["choi"] = matrix_to_json(f.channel->choi().matrix());
  if (check) j["report"] = report_to_json(check_channel(*f.channel));
  if (symmetric_check) j["symmetric"] = symmetric_choi_check(f.channel->choi());
  out << j.dump(2) << "\n";
  return kSeparable;
}

inline int cmd_family(const std::string& name, const std::vector<std::string>& params, const std::string& rep,
                      const std::string& path, std::ostream& out) {
  const FamilyMember m = make_family_member(family_from_string(name), parse_named_params(params));
  Json j;
  if (rep == "state") {
    j = state_to_json(m.choi_state, choi_shape(m.channel_dims), m.params_json());
  } else {
    if (!m.cp) {
      throw Refused("family member is not completely positive; use --representation state to inspect it",
                    {{"min_eigenvalue", m.min_eigenvalue}});
    }
    j = channel_to_json(m.channel(), representation_from_string(rep), m.params_json());
  }
  j["family"] = name;
  const std::string text = j.dump(2) + "\n";
  if (path.empty()) {
    out << text;
  } else {
    write_text(path, text);
  }
  return kSeparable;
}

struct ScanArgs {
  std::string family;
  std::vector<std::string> ranges;
  bool certify = false;
  std::string cut;
  std::string out;
};

inline int cmd_scan(const ScanArgs& a, const Settings& s, std::ostream& out, std::ostream& err) {
  ScanSpec spec;
  spec.family = family_from_string(a.family);
  for (const auto& r : a.ranges) spec.ranges.push_back(parse_param_range(r));
  scan_size(spec);
  spec.certify = a.certify;
  if (!a.cut.empty()) spec.cut = cut_kind_from_string(a.cut);
  spec.certify_options = certify_options(s);
  spec.jobs = s.jobs;
  std::vector<ScanRow> rows;
  if (a.out.empty()) {
    rows = write_scan_csv(spec, out);
  } else {
    std::ofstream f(a.out);
    if (!f) throw Error("cannot write '" + a.out + "'");
    rows = write_scan_csv(spec, f);
  }
  int failed = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].error.empty()) continue;
    err << "choicert: scan point " << i << ": " << rows[i].error << "\n";
    ++failed;
  }
  return failed == 0 ? kSeparable : kDataError;
}

// ---------------------------------------------------------------------------

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err,
                   const EnvLookup& env = process_env) {
  CLI::App app{"choicert: certify entanglement-breaking, separable and fully separable quantum channels"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "choicert 0.1.0");

  SettingOverrides flags;
  std::string config_path;
  auto add_settings = [&](CLI::App* sub, bool with_jobs) {
    sub->add_option("--config", config_path, "JSON config file (lowest precedence)");
    sub->add_option("--backend", flags.backend, "SDP backend (env CHOICERT_BACKEND)");
    sub->add_option("--tol", flags.tol, "relative rank tolerance for flatness (env CHOICERT_TOL)");
    sub->add_option("--max-order", flags.max_order, "highest relaxation order");
    sub->add_option("--objective", flags.objective, "first objective: trace or random");
    sub->add_option("--seed", flags.seed, "seed for random objectives");
    sub->add_option("--retries", flags.retries, "random-objective retries per order");
    if (with_jobs) sub->add_option("--jobs", flags.jobs, "worker threads (env CHOICERT_JOBS)");
  };

  CertifyArgs ca;
  CLI::App* certify_cmd = app.add_subcommand("certify", "decide EB/SEP/FS separability of a channel's Choi state");
  certify_cmd->add_option("file", ca.file, "channel or state JSON")->required();
  certify_cmd->add_option("--cut", ca.cut, "eb, sep or fs")->check(CLI::IsMember({"eb", "sep", "fs"}));
  certify_cmd->add_flag("--symmetric", ca.symmetric, "share variables across fs parties");
  certify_cmd->add_option("--basis", ca.basis, "basis for every factor (pauli, pauli_planar, gellmann, canonical_hermitian)");
  certify_cmd->add_flag("--dry-run", ca.dry_run, "print relaxation sizes without solving");
  certify_cmd->add_flag("--dump-tms", ca.dump_tms, "print the data moments as (index, value) pairs");
  certify_cmd->add_option("--out", ca.out, "also write the certificate here");
  add_settings(certify_cmd, false);

  std::string neg_file, neg_cut;
  CLI::App* neg_cmd = app.add_subcommand("negativity", "negativity and PPT status");
  neg_cmd->add_option("file", neg_file, "channel or state JSON")->required();
  neg_cmd->add_option("--cut", neg_cut, "transposed factors, e.g. 1 or 2,3 (default: second half)");

  std::string choi_file;
  bool choi_check = false, choi_sym = false;
  CLI::App* choi_cmd = app.add_subcommand("choi", "print the Choi matrix of a channel");
  choi_cmd->add_option("file", choi_file, "channel JSON")->required();
  choi_cmd->add_flag("--check", choi_check, "add the CP/TP report");
  choi_cmd->add_flag("--symmetric-check", choi_sym, "test support on the symmetric subspace");

  std::string fam_name, fam_rep = "superop", fam_out;
  std::vector<std::string> fam_params;
  CLI::App* fam_cmd = app.add_subcommand("family", "write a member of a built-in channel family");
  fam_cmd->add_option("name", fam_name, "qutrit_damping, one_qubit or planar_pair")->required();
  fam_cmd->add_option("--param", fam_params, "name=value (repeatable)");
  fam_cmd->add_option("--representation", fam_rep, "superop, kraus, choi or state");
  fam_cmd->add_option("--out", fam_out, "output file (default stdout)");

  ScanArgs sa;
  CLI::App* scan_cmd = app.add_subcommand("scan", "CSV scan of a channel family over a parameter grid");
  scan_cmd->add_option("--family", sa.family, "qutrit_damping, one_qubit or planar_pair")->required();
  scan_cmd->add_option("--range", sa.ranges, "name=lo:hi:steps or name=value (repeatable)");
  scan_cmd->add_flag("--certify", sa.certify, "certify every CP point");
  scan_cmd->add_option("--cut", sa.cut, "override the family's default cut");
  scan_cmd->add_option("--out", sa.out, "CSV file (default stdout)");
  add_settings(scan_cmd, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? 0 : kUsage;
  }

  try {
    Json config = Json::object();
    if (!config_path.empty()) config = load_config(config_path);
    const Settings settings = resolve_settings(flags, config, env);
    if (certify_cmd->parsed()) return cmd_certify(ca, settings, out);
    if (neg_cmd->parsed()) return cmd_negativity(neg_file, neg_cut, out);
    if (choi_cmd->parsed()) return cmd_choi(choi_file, choi_check, choi_sym, out);
    if (fam_cmd->parsed()) return cmd_family(fam_name, fam_params, fam_rep, fam_out, out);
    if (scan_cmd->parsed()) return cmd_scan(sa, settings, out, err);
  } catch (const Refused& e) {
    err << "choicert: refused: " << e.what() << "\n" << e.report().dump(2) << "\n";
    return kDataError;
  } catch (const Error& e) {
    const std::string msg = e.what();
    err << "choicert: " << msg << "\n";
    if (msg.rfind("cannot open", 0) == 0) return kNoInput;
    return kDataError;
  } catch (const std::exception& e) {
    err << "choicert: internal error: " << e.what() << "\n";
    return kInternal;
  }
  return kUsage;
}

}  // namespace choicert::cli
