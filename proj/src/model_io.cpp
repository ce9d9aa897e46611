#include "crnem/model_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "crnem/error.hpp"

namespace crnem::schemes {

namespace {

using nlohmann::json;

const json& field(const json& doc, const char* key) {
  if (!doc.contains(key)) throw ValidationError(std::string("model: missing key '") + key + "'");
  return doc.at(key);
}

std::vector<double> real_vector(const json& v, const char* key) {
  if (!v.is_array()) throw ValidationError(std::string("model: '") + key + "' must be an array");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) throw ValidationError(std::string("model: '") + key + "' must contain numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

std::vector<std::string> name_vector(const json& v, const char* key) {
  if (!v.is_array()) throw ValidationError(std::string("model: '") + key + "' must be an array");
  std::vector<std::string> out;
  for (const auto& e : v) {
    if (!e.is_string()) throw ValidationError(std::string("model: '") + key + "' must contain strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

intlat::IntMatrix int_matrix(const json& v, const char* key, std::size_t rows, std::size_t cols) {
  const std::string what = std::string("model: '") + key + "'";
  if (!v.is_array() || v.size() != rows) throw ValidationError(what + " must have " + std::to_string(rows) + " rows");
  intlat::IntMatrix out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const json& row = v[r];
    if (!row.is_array() || row.size() != cols)
      throw ValidationError(what + " row " + std::to_string(r + 1) + " must have " + std::to_string(cols) + " entries");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!row[c].is_number_integer()) throw ValidationError(what + " must contain integers");
      out(r, c) = static_cast<long>(row[c].get<std::int64_t>());
    }
  }
  return out;
}

std::size_t dimension(const json& doc, const char* key) {
  const json& v = field(doc, key);
  if (!v.is_number_unsigned()) throw ValidationError(std::string("model: '") + key + "' must be a nonnegative integer");
  return v.get<std::size_t>();
}

// nlohmann reports a byte offset; convert it to line and column.
std::pair<std::size_t, std::size_t> position(std::string_view text, std::size_t byte) {
  std::size_t line = 1, column = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') ++line, column = 1;
    else ++column;
  }
  return {line, column};
}

json matrix_json(const intlat::IntMatrix& m) {
  json out = json::array();
  for (const auto& row : m.to_int64()) out.push_back(row);
  return out;
}

}  // namespace

ModelSpec parse_model(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const auto [line, column] = position(text, e.byte);
    throw ParseError("malformed model JSON", line, column);
  }
  if (!doc.is_object()) throw ValidationError("model: top level must be an object");

  ModelSpec spec;
  spec.n = dimension(doc, "n");
  spec.m = dimension(doc, "m");
  spec.A = int_matrix(field(doc, "A"), "A", spec.m, spec.n);
  const json& s = field(doc, "S");
  spec.S = int_matrix(s, "S", s.is_array() ? s.size() : 0, spec.n);
  spec.c = doc.contains("c") ? real_vector(doc.at("c"), "c") : std::vector<double>(spec.n, 1.0);
  spec.x0 = real_vector(field(doc, "x0"), "x0");
  spec.theta0 = doc.contains("theta0") ? real_vector(doc.at("theta0"), "theta0") : std::vector<double>(spec.m, 1.0);
  if (doc.contains("species_x")) spec.species_x = name_vector(doc.at("species_x"), "species_x");
  if (doc.contains("species_theta")) spec.species_theta = name_vector(doc.at("species_theta"), "species_theta");
  if (doc.contains("y")) spec.y = real_vector(doc.at("y"), "y");
  if (doc.contains("rates")) {
    const json& rates = doc.at("rates");
    if (!rates.is_object()) throw ValidationError("model: 'rates' must be an object");
    if (rates.contains("theta")) spec.k_plus_theta = real_vector(rates.at("theta"), "rates.theta");
    if (rates.contains("x")) spec.k_plus_x = real_vector(rates.at("x"), "rates.x");
  }
  spec.validate();
  return spec;
}

ModelSpec load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open model file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_model(buffer.str());
}

std::string model_to_json(const ModelSpec& spec, int indent) {
  json doc;
  doc["n"] = spec.n;
  doc["m"] = spec.m;
  doc["A"] = matrix_json(spec.A);
  doc["S"] = matrix_json(spec.S);
  doc["c"] = spec.c;
  doc["x0"] = spec.x0;
  doc["theta0"] = spec.theta0;
  doc["species_x"] = spec.x_names();
  doc["species_theta"] = spec.theta_names();
  if (spec.y) doc["y"] = *spec.y;
  if (!spec.k_plus_theta.empty() || !spec.k_plus_x.empty()) {
    json rates = json::object();
    if (!spec.k_plus_theta.empty()) rates["theta"] = spec.k_plus_theta;
    if (!spec.k_plus_x.empty()) rates["x"] = spec.k_plus_x;
    doc["rates"] = rates;
  }
  return doc.dump(indent);
}

}  // namespace crnem::schemes
