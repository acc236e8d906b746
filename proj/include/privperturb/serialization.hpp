#pragma once

// JSON formats shared by the command-line tool and the test fixtures.
//
// System:  {"n", "p", "q", "A", "B", "G", "H", "pi"?, "G_raw"?, "H_raw"?,
//           "control_inputs"?}  (row-major nested arrays, 1-based indices)
// K:       {"n", "p", "l", "K_SS", "K_SI", "K_OS", "K_OI"}
//
// System and K files keep full double precision; reports round every number
// to 12 significant digits.

#include "privperturb/design.hpp"
#include "privperturb/design_l2.hpp"
#include "privperturb/hvac.hpp"

#include <nlohmann/json.hpp>

#include <string>

namespace privperturb {

using Json = nlohmann::json;

struct SystemFile {
  LinearSystem sys;
  ReleaseMap rel;
};

/// Parses a system document. Throws ArgumentError on malformed input.
SystemFile system_from_json(const Json& j);
Json system_to_json(const LinearSystem& sys, const ReleaseMap& rel);

Perturbation perturbation_from_json(const Json& j);
Json perturbation_to_json(const Perturbation& k);

/// Keys "x0[i]" / "u[j]" with 1-based indices.
Json protection_to_json(const ProtectionReport& report);
Json design_to_json(const DesignResult& result);
Json full_row_rank_to_json(const FullRowRankCheck& check);

/// Zone parameters; missing keys keep the values already in `base`.
ZoneParams zone_params_from_json(const Json& j, ZoneParams base = ZoneParams::path(10));
Json zone_params_to_json(const ZoneParams& params);
ClosedLoopOptions closed_loop_from_json(const Json& j, ClosedLoopOptions base = {});

/// Rounds to 12 significant digits (identity for 0 and non-finite values).
double round12(double v);
/// Matrix as nested arrays, rounded unless `exact` (full double precision).
Json matrix_to_json(const Matrix& m, bool exact = false);
Matrix matrix_from_json(const Json& j, const char* what);

/// Parses "x0:1,7;u:6" (1-based) into zero-based targets. "all" selects every
/// entry of x(0) and u.
TargetSpec parse_targets(const std::string& text, Index n, Index p);

std::string read_text_file(const std::string& path);
/// Writes through a temporary file in the same directory and renames it.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace privperturb
