#pragma once

/// \file model_io.hpp
/// JSON model files:
///
///   {"name": "...", "A": [[..]], "B": [[..]], "C": [[..]], "D": [[..]],
///    "sigma": 1.0, "x0": [..], "Sigma0": [[..]]}
///
/// D, x0 and Sigma0 are optional (zero, zero and identity).

#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "infotrans/linmodel.hpp"

namespace infotrans {

namespace detail {

inline Matrix parse_matrix(const nlohmann::json& j, const std::string& key) {
  if (!j.is_array() || j.empty()) {
    fail(ErrorKind::kParseError, "'" + key + "' must be a nonempty array of rows");
  }
  const auto rows = static_cast<Eigen::Index>(j.size());
  Eigen::Index cols = -1;
  Matrix out;
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array()) fail(ErrorKind::kParseError, "'" + key + "' rows must be arrays");
    if (cols < 0) {
      cols = static_cast<Eigen::Index>(row.size());
      out.resize(rows, cols);
    } else if (static_cast<Eigen::Index>(row.size()) != cols) {
      fail(ErrorKind::kParseError, "'" + key + "' is ragged");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      const auto& v = row[static_cast<std::size_t>(c)];
      if (!v.is_number()) fail(ErrorKind::kParseError, "'" + key + "' entries must be numbers");
      out(i, c) = v.get<double>();
    }
  }
  return out;
}

inline Vector parse_vector(const nlohmann::json& j, const std::string& key) {
  if (!j.is_array()) fail(ErrorKind::kParseError, "'" + key + "' must be an array");
  Vector out(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) fail(ErrorKind::kParseError, "'" + key + "' entries must be numbers");
    out(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return out;
}

inline nlohmann::json matrix_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace detail

/// Structural problems (bad JSON, missing keys, ragged arrays) raise
/// ParseError; inconsistent dimensions and invalid values raise the model's
/// own validation errors.
inline LinearGaussianModel parse_model(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::kParseError, std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) fail(ErrorKind::kParseError, "model file must hold a JSON object");
  static const char* const known[] = {"name", "A", "B", "C", "D", "sigma", "x0", "Sigma0"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(std::begin(known), std::end(known), key) == std::end(known)) {
      fail(ErrorKind::kParseError, "unknown key '" + key + "'");
    }
  }
  for (const char* key : {"A", "B", "C", "sigma"}) {
    if (!j.contains(key)) fail(ErrorKind::kParseError, std::string("missing key '") + key + "'");
  }

  Matrix a = detail::parse_matrix(j["A"], "A");
  Matrix b = detail::parse_matrix(j["B"], "B");
  Matrix c = detail::parse_matrix(j["C"], "C");
  if (!j["sigma"].is_number()) fail(ErrorKind::kParseError, "'sigma' must be a number");
  const double sigma = j["sigma"].get<double>();
  Matrix d = j.contains("D") ? detail::parse_matrix(j["D"], "D")
                             : Matrix::Zero(c.rows(), b.cols());
  Vector x0 = j.contains("x0") ? detail::parse_vector(j["x0"], "x0") : Vector::Zero(a.rows());
  Matrix sigma0 = j.contains("Sigma0") ? detail::parse_matrix(j["Sigma0"], "Sigma0")
                                       : Matrix::Identity(a.rows(), a.rows());
  std::string name;
  if (j.contains("name")) {
    if (!j["name"].is_string()) fail(ErrorKind::kParseError, "'name' must be a string");
    name = j["name"].get<std::string>();
  }
  return LinearGaussianModel(std::move(a), std::move(b), std::move(c), std::move(d), sigma,
                             std::move(x0), std::move(sigma0), std::move(name));
}

inline LinearGaussianModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kParseError, "cannot read model file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model(buf.str());
}

inline nlohmann::json model_to_json(const LinearGaussianModel& model) {
  nlohmann::json j;
  j["name"] = model.name();
  j["A"] = detail::matrix_json(model.A());
  j["B"] = detail::matrix_json(model.B());
  j["C"] = detail::matrix_json(model.C());
  j["D"] = detail::matrix_json(model.D());
  j["sigma"] = model.sigma();
  j["x0"] = std::vector<double>(model.x0().data(), model.x0().data() + model.x0().size());
  j["Sigma0"] = detail::matrix_json(model.sigma0());
  return j;
}

}  // namespace infotrans
