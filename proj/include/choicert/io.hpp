#pragma once

// JSON and CSV surfaces: channel files, certificates, dry-run statistics and
// scan rows. Complex numbers are [re, im] pairs, matrices row-major.

#include "choicert/channels.hpp"
#include "choicert/relax.hpp"

#include "json.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace choicert {

using Json = nlohmann::json;

namespace detail {

inline Complex complex_from_json(const Json& v) {
  if (v.is_number()) return {v.get<double>(), 0.0};
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
    return {v[0].get<double>(), v[1].get<double>()};
  }
  throw Error("expected a number or an [re, im] pair, got " + v.dump());
}

inline Json complex_to_json(Complex z) { return Json::array({z.real(), z.imag()}); }

}  // namespace detail

inline CMatrix matrix_from_json(const Json& rows) {
  if (!rows.is_array() || rows.empty()) throw Error("matrix must be a non-empty array of rows");
  const auto r = static_cast<Eigen::Index>(rows.size());
  if (!rows[0].is_array()) throw Error("matrix rows must be arrays");
  const auto c = static_cast<Eigen::Index>(rows[0].size());
  CMatrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    const Json& row = rows[i];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != c) throw Error("ragged matrix rows");
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = detail::complex_from_json(row[j]);
  }
  return m;
}

inline Json matrix_to_json(const CMatrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(detail::complex_to_json(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

enum class FileRepresentation { Superop, Kraus, Choi, State };

inline FileRepresentation representation_from_string(const std::string& s) {
  if (s == "superop") return FileRepresentation::Superop;
  if (s == "kraus") return FileRepresentation::Kraus;
  if (s == "choi") return FileRepresentation::Choi;
  if (s == "state") return FileRepresentation::State;
  throw Error("unknown representation '" + s + "' (expected superop, kraus, choi or state)");
}

inline std::string to_string(FileRepresentation r) {
  switch (r) {
    case FileRepresentation::Superop: return "superop";
    case FileRepresentation::Kraus: return "kraus";
    case FileRepresentation::Choi: return "choi";
    case FileRepresentation::State: return "state";
  }
  return "?";
}

/// Parsed input file: either a channel or, for "state" files, a bare
/// density matrix over `dims`.
struct ChannelFile {
  FileRepresentation representation = FileRepresentation::Superop;
  SubsystemShape dims;
  std::optional<Channel> channel;
  std::optional<HermitianMatrix> state;
  Json params = Json::object();

  bool is_state() const { return representation == FileRepresentation::State; }
};

inline ChannelFile channel_file_from_json(const Json& j) {
  if (!j.is_object()) throw Error("channel file must be a JSON object");
  for (const char* key : {"dims", "representation", "data"}) {
    if (!j.contains(key)) throw Error(std::string("channel file lacks \"") + key + "\"");
  }
  ChannelFile f;
  std::vector<int> dims;
  for (const auto& d : j.at("dims")) {
    if (!d.is_number_integer() || d.get<int>() < 1) throw Error("dims must be positive integers");
    dims.push_back(d.get<int>());
  }
  if (dims.empty()) throw Error("dims must not be empty");
  f.dims = SubsystemShape(dims);
  f.representation = representation_from_string(j.at("representation").get<std::string>());
  if (j.contains("params")) f.params = j.at("params");
  const Json& data = j.at("data");
  switch (f.representation) {
    case FileRepresentation::Superop:
      f.channel = Channel::from_superoperator(f.dims, matrix_from_json(data));
      break;
    case FileRepresentation::Choi:
      f.channel = Channel::from_choi(f.dims, HermitianMatrix(matrix_from_json(data)));
      break;
    case FileRepresentation::Kraus: {
      if (!data.is_array() || data.empty()) throw Error("kraus data must be a non-empty list of matrices");
      std::vector<CMatrix> ks;
      for (const auto& k : data) ks.push_back(matrix_from_json(k));
      f.channel = Channel::from_kraus(f.dims, ks);
      break;
    }
    case FileRepresentation::State: {
      HermitianMatrix rho(matrix_from_json(data));
      f.dims.check_matches(rho.dim());
      f.state = std::move(rho);
      break;
    }
  }
  return f;
}

inline ChannelFile load_channel_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  Json j;
  try {
    in >> j;
  } catch (const Json::parse_error& e) {
    throw Error("malformed JSON in '" + path + "': " + e.what());
  }
  return channel_file_from_json(j);
}

inline Json channel_to_json(const Channel& ch, FileRepresentation rep = FileRepresentation::Superop,
                            const Json& params = Json::object()) {
  Json j;
  j["dims"] = ch.shape().dims();
  j["representation"] = to_string(rep);
  switch (rep) {
    case FileRepresentation::Superop: j["data"] = matrix_to_json(ch.superoperator()); break;
    case FileRepresentation::Choi: j["data"] = matrix_to_json(ch.choi().matrix()); break;
    case FileRepresentation::Kraus: {
      Json list = Json::array();
      for (const auto& k : ch.kraus()) list.push_back(matrix_to_json(k));
      j["data"] = std::move(list);
      break;
    }
    case FileRepresentation::State: j["data"] = matrix_to_json(ch.choi_state().matrix()); break;
  }
  if (!params.empty()) j["params"] = params;
  return j;
}

inline Json state_to_json(const HermitianMatrix& rho, const SubsystemShape& dims, const Json& params = Json::object()) {
  dims.check_matches(rho.dim());
  Json j;
  j["dims"] = dims.dims();
  j["representation"] = "state";
  j["data"] = matrix_to_json(rho.matrix());
  if (!params.empty()) j["params"] = params;
  return j;
}

inline Json report_to_json(const ChannelReport& r) {
  return {{"cp", r.cp}, {"tp", r.tp}, {"trace", r.trace}, {"min_eigenvalue", r.min_eigenvalue},
          {"tp_defect", r.tp_defect}};
}

// ---------------------------------------------------------------------------
// Certificates

inline Json certificate_to_json(const Certificate& c, const CutSpec& cut) {
  Json j;
  j["verdict"] = to_string(c.verdict);
  j["order"] = c.order;
  j["rank"] = c.rank;
  j["cut"] = to_string(cut.kind);
  j["symmetric"] = cut.symmetric;
  Json bases = Json::array();
  for (const auto& b : cut.bases) bases.push_back(to_string(b.kind));
  j["bases"] = bases;
  j["rank_tolerances"] = kRankTolerances;
  Json orders = Json::array();
  for (const auto& o : c.orders) {
    Json ranks = Json::array();
    for (const auto& r : o.ranks) ranks.push_back(r);
    orders.push_back({{"t", o.t}, {"status", o.status}, {"flat", o.flat}, {"seconds", o.seconds},
                      {"moment_ranks", ranks}});
  }
  j["ranks"] = orders;
  if (c.atoms) {
    Json atoms = Json::array();
    const int parties = cut.num_groups();
    for (const auto& a : *c.atoms) {
      Json atom{{"weight", a.weight}};
      Json points = Json::array();
      for (int g = 0; g < parties; ++g) points.push_back(party_point(cut, a, g));
      if (parties == 2) {
        atom["point_side1"] = points[0];
        atom["point_side2"] = points[1];
      } else {
        atom["points"] = points;
      }
      atoms.push_back(std::move(atom));
    }
    j["atoms"] = atoms;
  } else {
    j["atoms"] = nullptr;
  }
  j["residual"] = std::isfinite(c.residual) ? Json(c.residual) : Json(nullptr);
  j["seconds"] = c.seconds;
  j["backend"] = c.backend;
  j["diagnostics"] = c.diagnostics;
  return j;
}

inline Json stats_to_json(const RelaxationStats& s) {
  return {{"dry_run", true},
          {"n", s.n},
          {"t", s.t},
          {"d0", s.d0},
          {"moment_block", s.moment_block},
          {"data_block", s.data_block},
          {"localizing_blocks", s.localizing_blocks},
          {"decision_variables", s.decision_variables},
          {"pinned_moments", s.pinned_moments},
          {"free_moments", s.free_moments}};
}

// ---------------------------------------------------------------------------
// CSV

/// %.12g, with nan for non-finite values.
inline std::string format_number(double v) {
  if (!std::isfinite(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline std::string verdict_code(const std::optional<Verdict>& v) {
  if (!v) return "-";
  switch (*v) {
    case Verdict::Separable: return "sep";
    case Verdict::Entangled: return "ent";
    case Verdict::Inconclusive: return "inc";
  }
  return "-";
}

}  // namespace choicert
