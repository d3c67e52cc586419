#pragma once

// Lattice spec files (JSON):
//   { "name": "hex", "dim": 2,
//     "generator": [[1, 0.5], [0, 0.8660254037844386]],
//     "scale": "1/2" }
// "generator" is row-major: generator[i][j] is row i, column j, and the
// columns are basis vectors. A flat array of dim*dim numbers is also
// accepted. "scale" is optional: a number or a rational string "p/q".

#include <filesystem>
#include <string_view>

#include "lattheta/lattice.hpp"

namespace lattheta {

Lattice parse_lattice_spec(std::string_view json_text);
Lattice load_lattice_spec(const std::filesystem::path& path);

}  // namespace lattheta
