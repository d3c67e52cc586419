#include "lattheta/lattice_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "lattheta/errors.hpp"

namespace lattheta {
namespace {

using nlohmann::json;

double parse_scale(const json& value) {
  if (value.is_number()) return value.get<double>();
  if (!value.is_string()) {
    fail(ErrorCode::kConfigError, "lattice spec: scale must be a number or \"p/q\"");
  }
  const auto text = value.get<std::string>();
  const auto slash = text.find('/');
  try {
    if (slash == std::string::npos) return std::stod(text);
    const double num = std::stod(text.substr(0, slash));
    const double den = std::stod(text.substr(slash + 1));
    if (den == 0.0) fail(ErrorCode::kConfigError, "lattice spec: zero denominator");
    return num / den;
  } catch (const std::logic_error&) {
    fail(ErrorCode::kConfigError, "lattice spec: malformed scale '" + text + "'");
  }
}

}  // namespace

Lattice parse_lattice_spec(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::kConfigError, std::string("lattice spec: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("generator")) {
    fail(ErrorCode::kConfigError, "lattice spec: missing \"generator\"");
  }
  const json& gen = doc["generator"];
  if (!gen.is_array() || gen.empty()) {
    fail(ErrorCode::kConfigError, "lattice spec: generator must be an array");
  }

  std::vector<double> flat;
  std::size_t rows = 0;
  try {
    if (gen.front().is_array()) {
      rows = gen.size();
      for (const auto& row : gen) {
        if (!row.is_array() || row.size() != rows) {
          fail(ErrorCode::kConfigError, "lattice spec: generator must be square");
        }
        for (const auto& x : row) flat.push_back(x.get<double>());
      }
    } else {
      for (const auto& x : gen) flat.push_back(x.get<double>());
      rows = static_cast<std::size_t>(std::llround(std::sqrt(flat.size())));
      if (rows * rows != flat.size()) {
        fail(ErrorCode::kConfigError, "lattice spec: flat generator is not square");
      }
    }
  } catch (const json::type_error&) {
    fail(ErrorCode::kConfigError, "lattice spec: generator entries must be numbers");
  }

  if (doc.contains("dim") && doc["dim"].get<std::size_t>() != rows) {
    fail(ErrorCode::kConfigError, "lattice spec: dim does not match generator");
  }
  const double scale = doc.contains("scale") ? parse_scale(doc["scale"]) : 1.0;

  RealMatrix m(rows, rows);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < rows; ++c) m(r, c) = scale * flat[r * rows + c];
  }
  return Lattice(std::move(m), doc.value("name", std::string("custom")));
}

Lattice load_lattice_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIoError, "cannot open lattice spec " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_lattice_spec(buf.str());
}

}  // namespace lattheta
