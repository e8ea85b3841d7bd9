#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace degcert {

inline constexpr const char* kVersion = "0.1.0";

/// Central tolerance record. Every numerical routine takes it by const
/// reference; the defaults below are the library's documented contract.
struct Tolerances {
  double tol_orth = 1e-10;    ///< ||R^T R - I||_max bound for SO(n) validation
  double tol_det = 1e-8;      ///< |det(R) - 1| bound
  double tol_recon = 1e-9;    ///< canonical-form / exp-log reconstruction residual
  double tol_pi = 1e-6;       ///< principal log rejects rotation angles within tol_pi of pi
  double tie_tol = 1e-3;      ///< branch-selection tie threshold (distance difference)
  double delta_step = 0.5;    ///< max ||F(t_{k+1}) - F(t_k)||_max along a frame loop
  double tol_closure = 1e-8;  ///< frame-loop closure residual
  double delta_lift = 1.0;    ///< max ||Ftil(t_{k+1}) - Ftil(t_k)||_max along a lift
  double k_round_tol = 0.05;  ///< integer-quantization residual for winding / k_i
  int max_depth = 20;         ///< bisection refinement depth limit
  double tol_sym = 1e-10;     ///< Hamiltonian symmetry residual
  double tol_gap = 1e-8;      ///< relative eigenvalue-gap threshold (degeneracy on loop)
  double overlap_min = 0.75;  ///< minimum matched eigenvector overlap during transport
  double tol_perm = 1e-6;     ///< signed-permutation closure residual
  double sigma_min = 1e-8;    ///< smallest-singular-value bound for projected frames
  double margin = 1e-6;       ///< strictness margin on the subspace overlap bound
  double tol_point = 1e-8;    ///< max diameter of a sweep's end loops
  double sweep_step = 0.5;    ///< max Hausdorff distance between consecutive sweep loops

  /// Name -> value view used by the CLI (--tol-<name>) and --show-config.
  std::vector<std::pair<std::string, double>> named() const {
    return {
        {"orth", tol_orth},       {"det", tol_det},
        {"recon", tol_recon},     {"pi", tol_pi},
        {"tie", tie_tol},         {"delta-step", delta_step},
        {"closure", tol_closure}, {"delta-lift", delta_lift},
        {"k-round", k_round_tol}, {"max-depth", double(max_depth)},
        {"sym", tol_sym},         {"gap", tol_gap},
        {"overlap-min", overlap_min}, {"perm", tol_perm},
        {"sigma-min", sigma_min}, {"margin", margin},
        {"point", tol_point},     {"sweep-step", sweep_step},
    };
  }

  bool set(const std::string& name, double value) {
    if (name == "orth") tol_orth = value;
    else if (name == "det") tol_det = value;
    else if (name == "recon") tol_recon = value;
    else if (name == "pi") tol_pi = value;
    else if (name == "tie") tie_tol = value;
    else if (name == "delta-step") delta_step = value;
    else if (name == "closure") tol_closure = value;
    else if (name == "delta-lift") delta_lift = value;
    else if (name == "k-round") k_round_tol = value;
    else if (name == "max-depth") max_depth = int(value);
    else if (name == "sym") tol_sym = value;
    else if (name == "gap") tol_gap = value;
    else if (name == "overlap-min") overlap_min = value;
    else if (name == "perm") tol_perm = value;
    else if (name == "sigma-min") sigma_min = value;
    else if (name == "margin") margin = value;
    else if (name == "point") tol_point = value;
    else if (name == "sweep-step") sweep_step = value;
    else return false;
    return true;
  }
};

enum class ErrorCode {
  Unknown = 1,
  ParseError = 2,
  NotOrthogonal = 3,
  NegativeDeterminant = 4,
  NumericalFailure = 5,
  AngleNearPi = 6,
  BranchAmbiguous = 7,
  RefinementUnavailable = 8,
  MaxDepthExceeded = 9,
  DegenerateSamples = 10,
  NotQuantized = 11,
  WrongDimension = 12,
  StepTooLarge = 13,
  DimensionMismatch = 14,
  NotScalar = 15,
  DegenerateOnLoop = 16,
  OverlapTooWeak = 17,
  NotSignedPermutation = 18,
  PermutedClosure = 19,
  ConditionViolated = 20,
  RankDeficient = 21,
  OverlapVanishes = 22,
  SweepDiscontinuous = 23,
  DegenerateOnSurface = 24,
  Precondition = 25,
  IoError = 26,
  ConfigInvalid = 27,
};

inline const char* to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::Unknown: return "UNKNOWN";
    case ErrorCode::ParseError: return "PARSE_ERROR";
    case ErrorCode::NotOrthogonal: return "NOT_ORTHOGONAL";
    case ErrorCode::NegativeDeterminant: return "NEGATIVE_DETERMINANT";
    case ErrorCode::NumericalFailure: return "NUMERICAL_FAILURE";
    case ErrorCode::AngleNearPi: return "ANGLE_NEAR_PI";
    case ErrorCode::BranchAmbiguous: return "BRANCH_AMBIGUOUS";
    case ErrorCode::RefinementUnavailable: return "REFINEMENT_UNAVAILABLE";
    case ErrorCode::MaxDepthExceeded: return "MAX_DEPTH_EXCEEDED";
    case ErrorCode::DegenerateSamples: return "DEGENERATE_SAMPLES";
    case ErrorCode::NotQuantized: return "NOT_QUANTIZED";
    case ErrorCode::WrongDimension: return "WRONG_DIMENSION";
    case ErrorCode::StepTooLarge: return "STEP_TOO_LARGE";
    case ErrorCode::DimensionMismatch: return "DIMENSION_MISMATCH";
    case ErrorCode::NotScalar: return "NOT_SCALAR";
    case ErrorCode::DegenerateOnLoop: return "DEGENERATE_ON_LOOP";
    case ErrorCode::OverlapTooWeak: return "OVERLAP_TOO_WEAK";
    case ErrorCode::NotSignedPermutation: return "NOT_SIGNED_PERMUTATION";
    case ErrorCode::PermutedClosure: return "PERMUTED_CLOSURE";
    case ErrorCode::ConditionViolated: return "CONDITION_VIOLATED";
    case ErrorCode::RankDeficient: return "RANK_DEFICIENT";
    case ErrorCode::OverlapVanishes: return "OVERLAP_VANISHES";
    case ErrorCode::SweepDiscontinuous: return "SWEEP_DISCONTINUOUS";
    case ErrorCode::DegenerateOnSurface: return "DEGENERATE_ON_SURFACE";
    case ErrorCode::Precondition: return "PRECONDITION";
    case ErrorCode::IoError: return "IO_ERROR";
    case ErrorCode::ConfigInvalid: return "CONFIG_INVALID";
  }
  return "UNKNOWN";
}

/// Exit code used by the CLI for each error kind.
inline int exit_code(ErrorCode c) { return static_cast<int>(c); }

/// Library-wide exception. `stage` names the failing module/operation,
/// `context` carries machine-readable details (sample index, parameter, ...).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string stage, const std::string& message,
        std::map<std::string, std::string> context = {})
      : std::runtime_error(std::string(to_string(code)) + " [" + stage + "] " + message),
        code_(code),
        stage_(std::move(stage)),
        brief_(message),
        context_(std::move(context)) {}

  ErrorCode code() const { return code_; }
  const std::string& stage() const { return stage_; }
  const std::string& brief() const { return brief_; }
  const std::map<std::string, std::string>& context() const { return context_; }

 private:
  ErrorCode code_;
  std::string stage_;
  std::string brief_;
  std::map<std::string, std::string> context_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& stage,
                              const std::string& message,
                              std::map<std::string, std::string> context = {}) {
  throw Error(code, stage, message, std::move(context));
}

}  // namespace degcert
