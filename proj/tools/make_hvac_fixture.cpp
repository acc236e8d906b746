// Writes an HVAC system JSON with random released-output matrices.

#include "privperturb/errors.hpp"
#include "privperturb/hvac.hpp"
#include "privperturb/serialization.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace privperturb;

int main(int argc, char** argv) {
  CLI::App app{"Generate an HVAC system fixture"};
  std::string params_file, out;
  std::size_t q = 9;
  std::uint64_t seed = 1;
  bool full_row_rank = false;
  app.add_option("--params", params_file, "Zone parameter JSON (defaults if omitted)")->check(CLI::ExistingFile);
  app.add_option("--q", q, "Number of released outputs")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "Seed for G and H");
  app.add_flag("--full-row-rank", full_row_rank, "Redraw until the exogenous view has full row rank everywhere");
  app.add_option("--out", out, "Output file")->required();
  CLI11_PARSE(app, argc, argv);

  try {
    ZoneParams params = ZoneParams::path(10);
    if (!params_file.empty()) params = zone_params_from_json(Json::parse(read_text_file(params_file)), params);
    const HvacSetup setup = make_hvac_system(params, q, seed, full_row_rank);
    write_file_atomic(out, system_to_json(setup.sys, setup.rel).dump(2) + "\n");
    std::cerr << "wrote " << out << " after " << setup.attempts << " draw(s)\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
