#pragma once

// Command-line front end: configuration, ingestion, orchestration, and
// machine-readable verdicts. Kept in a header so tests can drive the CLI
// in-process; the binary in tools/ only forwards to run_cli.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "degcert/io.hpp"
#include "degcert/models.hpp"
#include "degcert/oracles.hpp"
#include "degcert/report.hpp"
#include "degcert/stone.hpp"
#include "degcert/subspace.hpp"
#include "degcert/transport.hpp"

namespace degcert::cli {

using nlohmann::json;

namespace detail {

inline json tolerances_json(const Tolerances& tol) {
  json j;
  for (const auto& [name, value] : tol.named()) j[name] = value;
  return j;
}

inline std::vector<double> parse_csv_numbers(const std::string& text,
                                             const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (...) {
      fail(ErrorCode::ConfigInvalid, "cli", "cannot parse number '" + item + "' in " + what);
    }
  }
  return out;
}

inline transport::ParameterLoop parse_loop_spec(const std::string& spec, int samples) {
  if (spec.rfind("circle:", 0) == 0) {
    const auto v = parse_csv_numbers(spec.substr(7), "circle spec");
    if (v.size() != 3)
      fail(ErrorCode::ConfigInvalid, "cli", "circle spec needs cx,cy,r");
    return transport::ParameterLoop::circle(v[0], v[1], v[2], samples);
  }
  if (spec.rfind("ellipse:", 0) == 0) {
    const auto v = parse_csv_numbers(spec.substr(8), "ellipse spec");
    if (v.size() != 4)
      fail(ErrorCode::ConfigInvalid, "cli", "ellipse spec needs cx,cy,rx,ry");
    return transport::ParameterLoop::ellipse(v[0], v[1], v[2], v[3], samples);
  }
  auto verts = io::read_parameter_vertices(spec);
  return transport::ParameterLoop::from_vertices(std::move(verts), samples);
}

inline models::ModelSpec parse_model(const std::string& name, const std::string& params_json,
                                     std::uint64_t seed) {
  models::ModelSpec spec;
  spec.name = models::model_name_from_string(name);
  spec.seed = seed;
  if (!params_json.empty()) {
    json j;
    try {
      j = json::parse(params_json);
    } catch (const json::exception& e) {
      fail(ErrorCode::ConfigInvalid, "cli",
           std::string("--params must be a JSON object: ") + e.what());
    }
    if (!j.is_object())
      fail(ErrorCode::ConfigInvalid, "cli", "--params must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!it.value().is_number())
        fail(ErrorCode::ConfigInvalid, "cli", "model parameters must be numbers");
      spec.params[it.key()] = it.value().get<double>();
    }
  }
  return spec;
}

inline subspace::ReferenceSubspace parse_subspace_spec(const std::string& spec, int n) {
  if (spec.rfind("coords:", 0) == 0) {
    const int p = std::stoi(spec.substr(7));
    return subspace::ReferenceSubspace::coordinates(n, p);
  }
  std::ifstream in(spec);
  if (!in) fail(ErrorCode::IoError, "cli", "cannot open subspace file " + spec);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, "cli", std::string("invalid subspace JSON: ") + e.what());
  }
  if (!j.is_array() || j.empty())
    fail(ErrorCode::ParseError, "cli", "subspace file must be an array of basis rows");
  const int rows = int(j.size());
  const int cols = int(j.at(0).size());
  skewlin::Matrix basis(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (int(j.at(size_t(i)).size()) != cols)
      fail(ErrorCode::ParseError, "cli", "ragged subspace basis");
    for (int c = 0; c < cols; ++c) basis(i, c) = j.at(size_t(i)).at(size_t(c)).get<double>();
  }
  return subspace::ReferenceSubspace::from_basis(basis);
}

/// Build a real-symmetric sampler + loop from a precomputed matrix stream:
/// the parameter is the sample index (not refinable).
struct StreamInput {
  transport::HamiltonianSampler sampler;
  transport::ParameterLoop loop;
};

inline StreamInput stream_input(const std::string& path, const Tolerances& tol) {
  io::MatrixStream s = io::read_matrix_stream(path);
  if (s.matrices.size() < 5)
    fail(ErrorCode::ParseError, "cli", "matrix stream needs at least five samples");
  (void)tol;
  auto shared = std::make_shared<io::MatrixStream>(std::move(s));
  const size_t m = shared->matrices.size();

  // The stream's abstract loop parameter lives on a circle so the polyline
  // closes; eval maps a parameter point back to its exact sample index and
  // refuses anything in between (precomputed data is not refinable).
  transport::HamiltonianSampler h;
  h.dim = shared->n;
  h.eval = [shared, m](const skewlin::Vector& q) {
    double s01 = std::atan2(q[1], q[0]) / (2 * std::numbers::pi);
    if (s01 < 0) s01 += 1.0;
    const double pos = s01 * double(m - 1);
    const size_t k = size_t(std::lround(pos));
    if (std::abs(pos - double(k)) > 1e-6)
      fail(ErrorCode::RefinementUnavailable, "cli.stream",
           "matrix stream holds only precomputed samples");
    return shared->matrices[std::min(k, m - 1)];
  };
  std::vector<skewlin::Vector> verts;
  verts.reserve(m);
  for (size_t k = 0; k < m; ++k) {
    const double ang = 2 * std::numbers::pi * double(k) / double(m - 1);
    skewlin::Vector q(2);
    q << std::cos(ang), std::sin(ang);
    verts.push_back(q);
  }
  verts.back() = verts.front();
  return {std::move(h),
          transport::ParameterLoop::from_vertices(std::move(verts), int(m - 1), false)};
}

inline void write_error(std::ostream& out, const Error& e) {
  json j;
  j["error"] = {{"code", to_string(e.code())},
                {"exit_code", exit_code(e.code())},
                {"stage", e.stage()},
                {"message", e.brief()},
                {"context", e.context()}};
  j["version"] = kVersion;
  out << j.dump(2) << std::endl;
}

inline void emit_report(std::ostream& out, TestReport report, json invocation,
                        const Tolerances& tol) {
  invocation["tolerances"] = tolerances_json(tol);
  report.config_echo = std::move(invocation);
  out << report.to_json().dump(2) << std::endl;
}

inline void write_diag_csv(const std::string& path, const transport::TransportResult& tr,
                           const std::vector<std::pair<double, std::vector<double>>>&
                               lift_angles) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cli", "cannot write diagnostics CSV " + path);
  const int n = int(tr.eigenvalues.front().size());
  out << "t";
  for (int i = 0; i < n; ++i) out << ",eig" << i;
  out << ",min_gap";
  const size_t n_angles = lift_angles.empty() ? 0 : lift_angles.front().second.size();
  for (size_t i = 0; i < n_angles; ++i) out << ",lift_angle" << i;
  out << "\n";
  for (size_t k = 0; k < tr.params.size(); ++k) {
    out << tr.params[k];
    double gap = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      out << "," << tr.eigenvalues[k][i];
      if (i + 1 < n) gap = std::min(gap, tr.eigenvalues[k][i + 1] - tr.eigenvalues[k][i]);
    }
    out << "," << (n > 1 ? gap : 0.0);
    for (const auto& [t, angles] : lift_angles) {
      if (t == tr.params[k]) {
        for (double a : angles) out << "," << a;
        break;
      }
    }
    out << "\n";
  }
}

}  // namespace detail

inline int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"degcert: certify Hamiltonian degeneracies from loop topology"};
  app.require_subcommand(0, 1);

  Tolerances tol;
  bool show_config = false;
  app.add_flag("--show-config", show_config, "print the effective configuration and exit");
  app.set_version_flag("--version", std::string(kVersion));
  for (const auto& [name, value] : tol.named()) {
    const std::string flag = "--tol-" + name;
    app.add_option_function<double>(
           flag, [&tol, name = name](double v) { tol.set(name, v); },
           "override tolerance '" + name + "' (default " + std::to_string(value) + ")")
        ->expected(1);
  }

  // classify-loop
  auto* classify_cmd =
      app.add_subcommand("classify-loop", "homotopy class of a frame-loop file");
  std::string classify_input;
  classify_cmd->add_option("--input", classify_input, "frame-loop file (JSON or text)")
      ->required();

  // scan-hamiltonian
  auto* scan_cmd = app.add_subcommand(
      "scan-hamiltonian", "transport eigenframes along a loop and test for degeneracies");
  std::string scan_model, scan_params, scan_input, scan_loop, scan_subspace, scan_diag;
  std::uint64_t scan_seed = 0;
  int scan_samples = 256, scan_band = 0;
  scan_cmd->add_option("--model", scan_model, "built-in model name");
  scan_cmd->add_option("--params", scan_params, "model parameters as a JSON object");
  scan_cmd->add_option("--seed", scan_seed, "seed for randomized models");
  scan_cmd->add_option("--input", scan_input, "precomputed matrix stream (JSON or text)");
  scan_cmd->add_option("--loop", scan_loop,
                       "loop geometry: circle:cx,cy,r | ellipse:cx,cy,rx,ry | vertex file");
  scan_cmd->add_option("--samples", scan_samples, "samples along the loop");
  scan_cmd->add_option("--subspace", scan_subspace,
                       "projected test: coords:p or a basis-matrix JSON file");
  scan_cmd->add_option("--band", scan_band, "first eigenvalue index of the selected band");
  scan_cmd->add_option("--diag", scan_diag, "write per-sample diagnostics CSV here");

  // stone-test
  auto* stone_cmd =
      app.add_subcommand("stone-test", "geometric-phase sweep test for Hermitian families");
  std::string stone_model = "spin_half_monopole", stone_sphere, stone_file;
  int stone_sweeps = 50, stone_ring_samples = 100, stone_band = 0;
  bool stone_reverse = false;
  stone_cmd->add_option("--model", stone_model, "complex Hermitian model name");
  stone_cmd->add_option("--sphere", stone_sphere, "sweep sphere: cx,cy,cz,r");
  stone_cmd->add_option("--sweep-file", stone_file, "explicit loop list (JSON)");
  stone_cmd->add_option("--sweeps", stone_sweeps, "number of sweep loops");
  stone_cmd->add_option("--loop-samples", stone_ring_samples, "samples per loop");
  stone_cmd->add_option("--band", stone_band, "band index (ascending eigenvalues)");
  stone_cmd->add_flag("--reverse-orientation", stone_reverse, "flip surface orientation");

  // oracle
  auto* oracle_cmd =
      app.add_subcommand("oracle", "double-cover oracle report for a frame-loop file");
  std::string oracle_input;
  oracle_cmd->add_option("--input", oracle_input, "frame-loop file (JSON or text)")
      ->required();

  try {
    std::vector<const char*> argv;
    argv.push_back("degcert");
    for (const auto& a : args) argv.push_back(a.c_str());
    app.parse(int(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help() << std::flush;
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << std::endl;
    return 0;
  } catch (const CLI::ParseError& e) {
    json j;
    j["error"] = {{"code", "PARSE_ERROR"},
                  {"exit_code", exit_code(ErrorCode::ParseError)},
                  {"stage", "cli"},
                  {"message", std::string(e.what())}};
    out << j.dump(2) << std::endl;
    err << e.what() << std::endl;
    return exit_code(ErrorCode::ParseError);
  }

  if (show_config) {
    json j;
    j["tolerances"] = detail::tolerances_json(tol);
    j["version"] = kVersion;
    out << j.dump(2) << std::endl;
    return 0;
  }

  try {
    if (classify_cmd->parsed()) {
      const homotopy::FrameLoop loop = io::read_frame_loop(classify_input, tol);
      json invocation{{"subcommand", "classify-loop"}, {"input", classify_input}};
      TestReport report;
      if (loop.dim() == 2) {
        const auto w =
            homotopy::winding_number(homotopy::normalize_base_point(loop, tol), tol);
        report.winding = w.value;
        report.diagnostics["winding_residual"] = w.residual;
        if (w.value != 0) {
          report.verdict = Verdict::DegeneracyCertified;
          report.reason = Reason::NonzeroWinding;
        }
      } else {
        const auto verdict = homotopy::classify_loop(loop, tol);
        report.k_list = verdict.k_list;
        report.h = verdict.h;
        report.diagnostics["max_int_residual"] = verdict.max_int_residual;
        if (verdict.parity == homotopy::Parity::Nontrivial) {
          report.verdict = Verdict::DegeneracyCertified;
          report.reason = Reason::NontrivialLoop;
        }
      }
      detail::emit_report(out, std::move(report), std::move(invocation), tol);
      return 0;
    }

    if (scan_cmd->parsed()) {
      json invocation{{"subcommand", "scan-hamiltonian"},
                      {"samples", scan_samples},
                      {"band", scan_band},
                      {"seed", scan_seed}};
      transport::HamiltonianSampler h;
      std::optional<transport::ParameterLoop> loop;
      if (!scan_model.empty()) {
        if (scan_loop.empty())
          fail(ErrorCode::ConfigInvalid, "cli", "--model requires --loop");
        h = models::make_sampler(detail::parse_model(scan_model, scan_params, scan_seed));
        loop = detail::parse_loop_spec(scan_loop, scan_samples);
        invocation["model"] = scan_model;
        invocation["loop"] = scan_loop;
        if (!scan_params.empty()) invocation["params"] = json::parse(scan_params);
      } else if (!scan_input.empty()) {
        auto stream = detail::stream_input(scan_input, tol);
        h = std::move(stream.sampler);
        loop = std::move(stream.loop);
        invocation["input"] = scan_input;
      } else {
        fail(ErrorCode::ConfigInvalid, "cli",
             "scan-hamiltonian needs --model or --input");
      }

      TestReport report;
      if (!scan_subspace.empty()) {
        const auto ref = detail::parse_subspace_spec(scan_subspace, h.dim);
        invocation["subspace"] = scan_subspace;
        report = subspace::subspace_degeneracy_test(h, *loop, ref, scan_band, tol);
      } else {
        report = transport::run_degeneracy_test(h, *loop, tol);
      }

      if (!scan_diag.empty()) {
        const auto tr = transport::transport_frames(h, *loop, tol);
        std::vector<std::pair<double, std::vector<double>>> lift_angles;
        if (h.dim >= 3 &&
            transport::closure_classify(tr, tol) == transport::ClosureKind::ClosedLoop) {
          std::vector<skewlin::SpecialOrthogonalMatrix> frames;
          for (size_t k = 0; k + 1 < tr.frames.size(); ++k)
            frames.push_back(skewlin::SpecialOrthogonalMatrix::validate(tr.frames[k], tol));
          frames.push_back(frames.front());
          auto floop = homotopy::FrameLoop::create(std::move(frames), tr.params, {}, tol);
          try {
            auto lifted = homotopy::lift_loop(homotopy::normalize_base_point(floop, tol), tol);
            for (size_t k = 0; k < lifted.points.size(); ++k) {
              auto form = skewlin::skew_canonical_form(lifted.points[k], tol);
              lift_angles.push_back({lifted.params[k], form.angles});
            }
          } catch (const Error&) {
            // diagnostics stay eigenvalue-only when the plain lift needs help
          }
        }
        detail::write_diag_csv(scan_diag, tr, lift_angles);
      }
      detail::emit_report(out, std::move(report), std::move(invocation), tol);
      return 0;
    }

    if (stone_cmd->parsed()) {
      if (stone_model != "spin_half_monopole")
        fail(ErrorCode::ConfigInvalid, "cli",
             "stone-test supports the spin_half_monopole model");
      stone::ComplexHamiltonianSampler h;
      h.dim = 2;
      h.eval = [](const skewlin::Vector& q) { return models::spin_half_monopole(q); };

      std::optional<stone::SurfaceSweep> sweep;
      json invocation{{"subcommand", "stone-test"},
                      {"model", stone_model},
                      {"band", stone_band}};
      if (!stone_sphere.empty()) {
        const auto v = detail::parse_csv_numbers(stone_sphere, "sphere spec");
        if (v.size() != 4)
          fail(ErrorCode::ConfigInvalid, "cli", "sphere spec needs cx,cy,cz,r");
        skewlin::Vector center(3);
        center << v[0], v[1], v[2];
        sweep = stone::SurfaceSweep::sphere(center, v[3], stone_sweeps,
                                            stone_ring_samples, stone_reverse, tol);
        invocation["sphere"] = stone_sphere;
        invocation["sweeps"] = stone_sweeps;
        invocation["loop_samples"] = stone_ring_samples;
        invocation["reverse_orientation"] = stone_reverse;
      } else if (!stone_file.empty()) {
        std::ifstream in(stone_file);
        if (!in) fail(ErrorCode::IoError, "cli", "cannot open " + stone_file);
        json j;
        in >> j;
        std::vector<std::vector<skewlin::Vector>> loops;
        for (const auto& ring : j) {
          std::vector<skewlin::Vector> r;
          for (const auto& row : ring) {
            skewlin::Vector q(row.size());
            for (size_t i = 0; i < row.size(); ++i) q[long(i)] = row.at(i).get<double>();
            r.push_back(std::move(q));
          }
          loops.push_back(std::move(r));
        }
        sweep = stone::SurfaceSweep::from_loops(std::move(loops), tol);
        invocation["sweep_file"] = stone_file;
      } else {
        fail(ErrorCode::ConfigInvalid, "cli", "stone-test needs --sphere or --sweep-file");
      }

      auto [result, report] = stone::stone_test(h, *sweep, stone_band, tol);
      detail::emit_report(out, std::move(report), std::move(invocation), tol);
      return 0;
    }

    if (oracle_cmd->parsed()) {
      const homotopy::FrameLoop loop = io::read_frame_loop(oracle_input, tol);
      json j;
      const auto lift = oracles::spin_lift(loop, tol);
      j["oracle"] = {{"spin_sign", lift.sign},
                     {"max_norm_drift", lift.max_norm_drift},
                     {"scalar_residual", lift.scalar_residual}};
      if (loop.dim() == 3)
        j["oracle"]["quaternion_sign"] = oracles::quaternion_lift(loop, tol);
      j["version"] = kVersion;
      out << j.dump(2) << std::endl;
      return 0;
    }

    out << app.help() << std::flush;
    return 0;
  } catch (const Error& e) {
    detail::write_error(out, e);
    err << e.what() << std::endl;
    return exit_code(e.code());
  } catch (const std::exception& e) {
    json j;
    j["error"] = {{"code", "UNKNOWN"}, {"exit_code", 1}, {"message", e.what()}};
    out << j.dump(2) << std::endl;
    err << e.what() << std::endl;
    return 1;
  }
}

}  // namespace degcert::cli
