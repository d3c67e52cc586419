#pragma once

// Command-line front end: configuration, experiment drivers and CSV/JSON
// emission.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace lattheta {

// start:stop:step, a comma list, or a single value. Values must be
// nonempty and strictly increasing.
struct Grid {
  std::vector<double> values;
  std::string text;

  static Grid parse(std::string_view text);
};

struct RunConfig {
  std::string command;
  std::vector<std::string> positional;  // catalog action and name
  std::vector<std::string> lattices;    // catalog names or spec-file paths
  std::optional<int> dim;
  int K = 2;
  std::optional<Grid> sigma2;
  std::optional<Grid> rho_db;
  std::optional<Grid> q;
  std::optional<std::uint64_t> seed;
  std::size_t trials = 100;
  std::string mode;                  // exact|approx, or hnf|orthogonal
  std::vector<std::string> modes;    // theta: exact, approx, baseline
  std::string out;                   // empty = stdout
  int box = 8;
  int p = 1;
  std::vector<std::int64_t> c;
  int code_index = 3;                // coarse lattice Λ_C = k·Λ_F
  bool integer_channel = false;

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
};

// Runs one command. Errors become a JSON record on `err` and a nonzero
// status (see exit_code).
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

// Parses argv (CLI11) and runs.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// Shortest round-trip decimal form.
std::string format_double(double value);

}  // namespace lattheta
