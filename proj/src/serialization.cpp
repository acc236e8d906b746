#include "privperturb/serialization.hpp"

#include "privperturb/errors.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace privperturb {

double round12(double v) {
  if (v == 0.0 || !std::isfinite(v)) return v;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return std::strtod(buf, nullptr);
}

Json matrix_to_json(const Matrix& m, bool exact) {
  Json rows = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(exact ? m(i, j) : round12(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const Json& j, const char* what) {
  if (!j.is_array() || j.empty()) throw ArgumentError(std::string(what) + " must be a non-empty array of rows");
  const auto rows = static_cast<Index>(j.size());
  if (!j[0].is_array() || j[0].empty()) throw ArgumentError(std::string(what) + " rows must be non-empty arrays");
  const auto cols = static_cast<Index>(j[0].size());
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const Json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
      throw ArgumentError(std::string(what) + " has rows of different lengths");
    }
    for (Index c = 0; c < cols; ++c) {
      const Json& v = row[static_cast<std::size_t>(c)];
      if (!v.is_number()) throw ArgumentError(std::string(what) + " contains a non-numeric entry");
      m(r, c) = v.get<double>();
    }
  }
  return m;
}

namespace {

Index dim(const Json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number_integer() || j.at(key).get<long long>() < 1) {
    throw ArgumentError(std::string("system document needs a positive integer \"") + key + "\"");
  }
  return static_cast<Index>(j.at(key).get<long long>());
}

void expect_shape(const Matrix& m, Index rows, Index cols, const char* what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw ArgumentError(std::string(what) + " is " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                        ", expected " + std::to_string(rows) + "x" + std::to_string(cols));
  }
}

Json flag_map(const std::vector<EntryFlag>& flags, const char* prefix) {
  Json out = Json::object();
  for (const auto& f : flags) {
    out[std::string(prefix) + "[" + std::to_string(f.index + 1) + "]"] = f.certified ? "certified" : "not certified";
  }
  return out;
}

Json vector_json(const Vector& v) {
  Json out = Json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(round12(v(i)));
  return out;
}

}  // namespace

SystemFile system_from_json(const Json& j) {
  if (!j.is_object()) throw ArgumentError("system document must be a JSON object");
  const Index n = dim(j, "n");
  const Index p = dim(j, "p");
  const Index q = dim(j, "q");
  for (const char* key : {"A", "B", "G", "H"}) {
    if (!j.contains(key)) throw ArgumentError(std::string("system document is missing \"") + key + "\"");
  }
  Matrix a = matrix_from_json(j.at("A"), "A");
  Matrix b = matrix_from_json(j.at("B"), "B");
  Matrix g = matrix_from_json(j.at("G"), "G");
  Matrix h = matrix_from_json(j.at("H"), "H");
  expect_shape(a, n, n, "A");
  expect_shape(b, n, p, "B");
  expect_shape(g, q, n, "G");
  expect_shape(h, q, p, "H");

  std::optional<InputPartition> part;
  if (j.contains("control_inputs")) {
    const Json& ci = j.at("control_inputs");
    if (!ci.is_array()) throw ArgumentError("control_inputs must be an array of 1-based input indices");
    InputPartition ip;
    std::vector<bool> is_control(static_cast<std::size_t>(p), false);
    for (const auto& v : ci) {
      if (!v.is_number_integer()) throw ArgumentError("control_inputs must hold integers");
      const auto idx = v.get<long long>();
      if (idx < 1 || idx > p) throw ArgumentError("control input index " + std::to_string(idx) + " out of range");
      if (is_control[static_cast<std::size_t>(idx - 1)]) throw ArgumentError("control input listed twice");
      is_control[static_cast<std::size_t>(idx - 1)] = true;
    }
    for (Index i = 0; i < p; ++i) (is_control[static_cast<std::size_t>(i)] ? ip.control : ip.exogenous).push_back(i);
    part = std::move(ip);
  }
  LinearSystem sys(a, b, g, h, part);

  ReleaseMap rel = ReleaseMap::identity(sys);
  if (j.contains("pi")) {
    rel.pi = matrix_from_json(j.at("pi"), "pi");
    if (rel.pi.rows() != q) throw ArgumentError("pi must have q rows");
    rel.g_raw = j.contains("G_raw") ? matrix_from_json(j.at("G_raw"), "G_raw") : pinv(rel.pi) * g;
    rel.h_raw = j.contains("H_raw") ? matrix_from_json(j.at("H_raw"), "H_raw") : pinv(rel.pi) * h;
  }
  rel.validate(sys);
  return {std::move(sys), std::move(rel)};
}

Json system_to_json(const LinearSystem& sys, const ReleaseMap& rel) {
  Json j;
  j["n"] = sys.n();
  j["p"] = sys.p();
  j["q"] = sys.q();
  j["A"] = matrix_to_json(sys.A(), true);
  j["B"] = matrix_to_json(sys.B(), true);
  j["G"] = matrix_to_json(sys.G(), true);
  j["H"] = matrix_to_json(sys.H(), true);
  const bool identity = rel.pi.rows() == rel.pi.cols() && rel.pi.isIdentity(0.0);
  if (!identity) {
    j["pi"] = matrix_to_json(rel.pi, true);
    j["G_raw"] = matrix_to_json(rel.g_raw, true);
    j["H_raw"] = matrix_to_json(rel.h_raw, true);
  }
  if (sys.partition()) {
    Json ci = Json::array();
    for (Index i : sys.partition()->control) ci.push_back(i + 1);
    j["control_inputs"] = ci;
  }
  return j;
}

Perturbation perturbation_from_json(const Json& j) {
  if (!j.is_object()) throw ArgumentError("perturbation document must be a JSON object");
  for (const char* key : {"K_SS", "K_SI", "K_OS", "K_OI"}) {
    if (!j.contains(key)) throw ArgumentError(std::string("perturbation document is missing \"") + key + "\"");
  }
  Perturbation k{matrix_from_json(j.at("K_SS"), "K_SS"), matrix_from_json(j.at("K_SI"), "K_SI"),
                 matrix_from_json(j.at("K_OS"), "K_OS"), matrix_from_json(j.at("K_OI"), "K_OI")};
  k.validate(k.n(), k.p(), k.l());
  return k;
}

Json perturbation_to_json(const Perturbation& k) {
  Json j;
  j["n"] = k.n();
  j["p"] = k.p();
  j["l"] = k.l();
  j["K_SS"] = matrix_to_json(k.k_ss, true);
  j["K_SI"] = matrix_to_json(k.k_si, true);
  j["K_OS"] = matrix_to_json(k.k_os, true);
  j["K_OI"] = matrix_to_json(k.k_oi, true);
  return j;
}

Json protection_to_json(const ProtectionReport& report) {
  Json j;
  j["z"] = round12(report.witness_z);
  j["all_protected"] = report.all_protected;
  j["kernel_dim"] = report.kernel_dim;
  j["certified_count"] = report.certified_count();
  Json flags = flag_map(report.state_flags, "x0");
  const Json input_flags = flag_map(report.input_flags, "u");
  for (const auto& [key, value] : input_flags.items()) flags[key] = value;
  j["flags"] = flags;
  j["witness_vector"] = report.witness_vector ? vector_json(*report.witness_vector) : Json(nullptr);
  return j;
}

Json full_row_rank_to_json(const FullRowRankCheck& check) {
  Json j;
  j["holds"] = check.holds;
  j["probe_z"] = round12(check.probe_z);
  j["probe_rank"] = check.probe_rank;
  Json zeros = Json::array();
  for (const auto& z : check.invariant_zeros) zeros.push_back({round12(z.real()), round12(z.imag())});
  j["invariant_zeros"] = zeros;
  return j;
}

Json design_to_json(const DesignResult& r) {
  Json j;
  j["z"] = round12(r.z);
  j["rho"] = r.rho;
  j["pencil_rank"] = r.pencil_rank;
  j["objective"] = {{"l1_value", round12(r.objective.l1_value)},
                    {"nuclear_value", round12(r.objective.nuclear_value)},
                    {"l0_count", r.objective.l0_count},
                    {"l2_value", round12(r.objective.l2_value)}};
  j["upper_bound"] = round12(r.upper_bound);
  j["protection"] = protection_to_json(r.protection);
  j["controllable"] = r.controllability.controllable;
  if (r.certificate) {
    j["psd_certificate"] = {{"certified", r.certificate->certified}, {"min_eig", round12(r.certificate->min_eig)}};
  }
  if (r.sdp_status) j["sdp_status"] = to_string(*r.sdp_status);
  if (r.sdp_kkt) {
    j["sdp_kkt"] = {{"primal_res", round12(r.sdp_kkt->primal_res)},
                    {"dual_res", round12(r.sdp_kkt->dual_res)},
                    {"rel_gap", round12(r.sdp_kkt->rel_gap)}};
  }
  return j;
}

ZoneParams zone_params_from_json(const Json& j, ZoneParams base) {
  if (!j.is_object()) throw ArgumentError("zone parameters must be a JSON object");
  auto read = [&](const char* key, double& out) {
    if (!j.contains(key)) return;
    if (!j.at(key).is_number()) throw ArgumentError(std::string("zone parameter \"") + key + "\" must be a number");
    out = j.at(key).get<double>();
  };
  read("L", base.L);
  read("dt", base.dt);
  read("c_o", base.c_o);
  read("c_p", base.c_p);
  read("m_s", base.m_s);
  double r = base.edges.empty() ? 20.0 : base.edges.front().r;
  const bool r_given = j.contains("R");
  read("R", r);
  if (j.contains("N")) {
    if (!j.at("N").is_number_integer() || j.at("N").get<long long>() < 1) throw ArgumentError("N must be a positive integer");
    const auto n = static_cast<std::size_t>(j.at("N").get<long long>());
    ZoneParams path = ZoneParams::path(n, r);
    base.N = n;
    base.edges = path.edges;
  } else if (r_given) {
    for (auto& e : base.edges) e.r = r;
  }
  if (j.contains("edges")) {
    base.edges.clear();
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() < 2) throw ArgumentError("edges must be [i, j] or [i, j, R] with 1-based zones");
      const auto a = e.at(0).get<long long>();
      const auto b = e.at(1).get<long long>();
      if (a < 1 || b < 1) throw ArgumentError("edge zone indices are 1-based");
      base.edges.push_back({static_cast<std::size_t>(a - 1), static_cast<std::size_t>(b - 1),
                            e.size() > 2 ? e.at(2).get<double>() : r});
    }
  }
  base.validate();
  return base;
}

Json zone_params_to_json(const ZoneParams& params) {
  Json j;
  j["L"] = params.L;
  j["dt"] = params.dt;
  j["c_o"] = params.c_o;
  j["c_p"] = params.c_p;
  j["m_s"] = params.m_s;
  j["N"] = params.N;
  Json edges = Json::array();
  for (const auto& e : params.edges) edges.push_back({e.i + 1, e.j + 1, e.r});
  j["edges"] = edges;
  return j;
}

ClosedLoopOptions closed_loop_from_json(const Json& j, ClosedLoopOptions base) {
  if (!j.is_object()) throw ArgumentError("scenario must be a JSON object");
  try {
    if (j.contains("setpoint")) base.setpoint = j.at("setpoint").get<double>();
    if (j.contains("horizon")) base.horizon = j.at("horizon").get<std::size_t>();
    if (j.contains("occupancy_max")) base.occupancy_max = j.at("occupancy_max").get<std::size_t>();
    if (j.contains("initial_temperature")) base.initial_temperature = j.at("initial_temperature").get<double>();
    if (j.contains("seed")) base.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("lqr_q")) base.q_weight = j.at("lqr_q").get<double>();
    if (j.contains("lqr_r")) base.r_weight = j.at("lqr_r").get<double>();
  } catch (const Json::exception& e) {
    throw ArgumentError(std::string("malformed scenario: ") + e.what());
  }
  return base;
}

TargetSpec parse_targets(const std::string& text, Index n, Index p) {
  if (text == "all") return TargetSpec::all(n, p);
  TargetSpec t;
  std::stringstream groups(text);
  std::string group;
  while (std::getline(groups, group, ';')) {
    if (group.empty()) continue;
    const auto colon = group.find(':');
    if (colon == std::string::npos) throw ArgumentError("target group '" + group + "' lacks ':'");
    const std::string kind = group.substr(0, colon);
    std::vector<Index>* dest;
    Index limit;
    if (kind == "x0" || kind == "x") {
      dest = &t.state_targets;
      limit = n;
    } else if (kind == "u") {
      dest = &t.input_targets;
      limit = p;
    } else {
      throw ArgumentError("unknown target kind '" + kind + "' (expected x0 or u)");
    }
    std::stringstream items(group.substr(colon + 1));
    std::string item;
    while (std::getline(items, item, ',')) {
      char* end = nullptr;
      const long v = std::strtol(item.c_str(), &end, 10);
      if (item.empty() || *end != '\0') throw ArgumentError("target index '" + item + "' is not an integer");
      if (v < 1 || v > limit) throw ArgumentError("target index " + item + " out of range 1.." + std::to_string(limit));
      dest->push_back(static_cast<Index>(v - 1));
    }
  }
  if (t.empty()) throw ArgumentError("targets select no entries");
  return t;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ArgumentError("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw ArgumentError("write to '" + tmp.string() + "' failed");
  }
  fs::rename(tmp, target);
}

}  // namespace privperturb
