#pragma once

// File formats: frame-loop and matrix-stream files as JSON (header fields
// n/count/layout plus flat row-major matrices), with a whitespace-separated
// text variant for large inputs. Parsing is strict: unknown keys are errors.

#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "degcert/homotopy.hpp"

namespace degcert::io {

using nlohmann::json;
using skewlin::Matrix;

struct MatrixStream {
  int n = 0;
  std::vector<Matrix> matrices;
  std::vector<double> params;  // empty -> uniform on [0, 1]
};

namespace detail {

inline void reject_unknown_keys(const json& j, const std::set<std::string>& allowed,
                                const std::string& what) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key()))
      fail(ErrorCode::ParseError, "io", "unknown key '" + it.key() + "' in " + what);
}

inline MatrixStream parse_json_stream(const json& j) {
  reject_unknown_keys(j, {"n", "count", "layout", "matrices", "params"}, "matrix file");
  MatrixStream s;
  if (!j.contains("n") || !j.contains("count") || !j.contains("matrices"))
    fail(ErrorCode::ParseError, "io", "matrix file needs keys n, count, matrices");
  s.n = j.at("n").get<int>();
  const size_t count = j.at("count").get<size_t>();
  if (j.contains("layout") && j.at("layout").get<std::string>() != "row-major")
    fail(ErrorCode::ParseError, "io", "unsupported layout (expect row-major)");
  if (s.n < 1) fail(ErrorCode::ParseError, "io", "dimension must be positive");
  const auto& arr = j.at("matrices");
  if (!arr.is_array() || arr.size() != count)
    fail(ErrorCode::ParseError, "io",
         "matrix count " + std::to_string(arr.size()) + " does not match header count " +
             std::to_string(count));
  for (const auto& flat : arr) {
    if (!flat.is_array() || int(flat.size()) != s.n * s.n)
      fail(ErrorCode::ParseError, "io", "each matrix must hold n*n numbers");
    Matrix m(s.n, s.n);
    for (int i = 0; i < s.n; ++i)
      for (int c = 0; c < s.n; ++c) m(i, c) = flat.at(size_t(i * s.n + c)).get<double>();
    s.matrices.push_back(std::move(m));
  }
  if (j.contains("params")) {
    s.params = j.at("params").get<std::vector<double>>();
    if (s.params.size() != s.matrices.size())
      fail(ErrorCode::ParseError, "io", "params length must match matrix count");
  }
  return s;
}

inline MatrixStream parse_text_stream(std::istream& in) {
  MatrixStream s;
  size_t count = 0;
  if (!(in >> s.n >> count))
    fail(ErrorCode::ParseError, "io", "text stream must start with: n count");
  if (s.n < 1) fail(ErrorCode::ParseError, "io", "dimension must be positive");
  for (size_t k = 0; k < count; ++k) {
    Matrix m(s.n, s.n);
    for (int i = 0; i < s.n; ++i)
      for (int c = 0; c < s.n; ++c)
        if (!(in >> m(i, c)))
          fail(ErrorCode::ParseError, "io",
               "text stream ended inside matrix " + std::to_string(k));
    s.matrices.push_back(std::move(m));
  }
  double extra;
  if (in >> extra)
    fail(ErrorCode::ParseError, "io", "trailing data after the declared matrices");
  return s;
}

}  // namespace detail

/// Sniffs JSON ('{' first) vs whitespace-separated text.
inline MatrixStream read_matrix_stream(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "io", "cannot open " + path);
  char first = 0;
  in >> std::ws;
  first = char(in.peek());
  if (first == '{') {
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      fail(ErrorCode::ParseError, "io", std::string("invalid JSON: ") + e.what());
    }
    return detail::parse_json_stream(j);
  }
  return detail::parse_text_stream(in);
}

inline homotopy::FrameLoop read_frame_loop(const std::string& path,
                                           const Tolerances& tol = {}) {
  MatrixStream s = read_matrix_stream(path);
  if (s.matrices.size() < 2)
    fail(ErrorCode::ParseError, "io", "frame-loop file needs at least two samples");
  std::vector<skewlin::SpecialOrthogonalMatrix> samples;
  samples.reserve(s.matrices.size());
  for (const auto& m : s.matrices)
    samples.push_back(skewlin::SpecialOrthogonalMatrix::validate(m, tol));
  if (s.params.empty()) return homotopy::FrameLoop::create_uniform(std::move(samples), {}, tol);
  return homotopy::FrameLoop::create(std::move(samples), s.params, {}, tol);
}

inline void write_frame_loop(const std::string& path, const homotopy::FrameLoop& loop) {
  json j;
  j["n"] = loop.dim();
  j["count"] = loop.size();
  j["layout"] = "row-major";
  json arr = json::array();
  for (size_t k = 0; k < loop.size(); ++k) {
    json flat = json::array();
    const Matrix& m = loop.sample(k).matrix();
    for (int i = 0; i < loop.dim(); ++i)
      for (int c = 0; c < loop.dim(); ++c) flat.push_back(m(i, c));
    arr.push_back(std::move(flat));
  }
  j["matrices"] = std::move(arr);
  j["params"] = loop.params();
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "io", "cannot write " + path);
  out << j.dump(2) << "\n";
}

inline void write_matrix_stream(const std::string& path, const MatrixStream& s) {
  json j;
  j["n"] = s.n;
  j["count"] = s.matrices.size();
  j["layout"] = "row-major";
  json arr = json::array();
  for (const auto& m : s.matrices) {
    json flat = json::array();
    for (int i = 0; i < s.n; ++i)
      for (int c = 0; c < s.n; ++c) flat.push_back(m(i, c));
    arr.push_back(std::move(flat));
  }
  j["matrices"] = std::move(arr);
  if (!s.params.empty()) j["params"] = s.params;
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "io", "cannot write " + path);
  out << j.dump(2) << "\n";
}

/// Parameter loop file: JSON array of d-vectors (closed polyline).
inline std::vector<skewlin::Vector> read_parameter_vertices(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "io", "cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, "io", std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_array() || j.size() < 3)
    fail(ErrorCode::ParseError, "io", "parameter loop must be an array of >= 3 vectors");
  std::vector<skewlin::Vector> verts;
  for (const auto& row : j) {
    if (!row.is_array() || row.empty())
      fail(ErrorCode::ParseError, "io", "each vertex must be a nonempty array");
    skewlin::Vector q(row.size());
    for (size_t i = 0; i < row.size(); ++i) q[long(i)] = row.at(i).get<double>();
    verts.push_back(std::move(q));
  }
  return verts;
}

}  // namespace degcert::io
