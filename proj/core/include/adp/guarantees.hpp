#pragma once

// Numerical verdicts for the recovery guarantees: the strong null space
// property, uniqueness from a certificate (plain and separable), and the
// explicit constants of the l2 stability bound ||x* - x0|| <= C eps together
// with an observed-vs-bound check of a solved instance.

#include "adp/certificates.hpp"
#include "adp/linops.hpp"
#include "adp/norms.hpp"
#include "adp/solver.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace adp {

enum class UniquenessStatus { unique_certified, unique_up_to_sampling, undecided, violated };

std::string to_string(UniquenessStatus status);

struct UniquenessVerdict {
  UniquenessStatus status = UniquenessStatus::undecided;
  /// For `violated`: unit h in ker(phi) at which the null space inequality fails.
  std::optional<Vector> witness;
  /// Smallest value of ||L_S^* h|| - <L_T^* h, e> found on the unit sphere of
  /// ker(phi) (+inf when the kernel is trivial).
  double min_gap = 0.0;
};

struct NspOptions {
  int restarts = 64;
  double margin = 1e-6;
  int iterations = 1500;
  std::uint64_t seed = 0;
};

/// Evaluates g(h) = ||L_S^* h|| - <L_T^* h, e> over unit h in ker(phi). The
/// norm on L_S^* h is the primal norm. Trivial kernel: unique_certified. One
/// dimensional kernel: both signs are evaluated, so the verdict is exact.
/// Otherwise multi-start projected subgradient descent on the sphere decides
/// between unique_up_to_sampling, violated and undecided.
UniquenessVerdict strong_nsp_check(const LinearOperator& phi, const LinearOperator& analysis,
                                   const DecompositionModel& model, const DecomposableNorm& norm,
                                   const NspOptions& opts = {});

/// unique_certified iff saturation < 1 and c_phi > 0.
UniquenessVerdict uniqueness_from_certificate(const DualCertificate& cert, double c_phi);

/// Weakened non-saturation on V subset of S = V (+) W: unique_certified iff
/// ||P_V alpha||_* < 1 and phi is injective on ker(L_V^*). Throws for
/// non-separable norms or when (V, W) does not split the model's S.
UniquenessVerdict separable_uniqueness(const DualCertificate& cert, const DecompositionModel& model,
                                       const Subspace& v, const Subspace& w,
                                       const DecomposableNorm& norm, const LinearOperator& phi,
                                       const LinearOperator& analysis);

struct StabilityBound {
  double c = 0.0;           // lambda = c * eps
  double eta_norm = 0.0;    // ||eta||_2
  double saturation = 0.0;  // ||alpha_{S0}||_* (or ||alpha_V||_*)
  double c_phi = 0.0;       // restricted injectivity constant
  double c_l = 0.0;         // smallest nonzero singular value of L_{S0}^* (sqrt(a) for frames)
  double c_a = 0.0;         // coercivity constant of the norm
  double phi_norm = 0.0;    // ||phi||_{2,2}
  double c1 = 0.0;
  double c2 = 0.0;
  double total_c = 0.0;
  bool frame_mode = false;
};

/// Assembles C = c1 (2 + c|eta|) + c2 (1 + c|eta|/2)^2 / (c (1 - saturation))
/// with c1 = 1/c_phi and c2 = (|phi| + c_phi) / (c_l c_phi c_a).
/// `nonsaturated` is the subspace whose margin enters the bound: S0 itself, or
/// a V subset of S0 for separable norms.
/// With `frame_lower_bound = a`, L^* must be injective with
/// ||L^* x||^2 >= a ||x||^2; c_l becomes sqrt(a) and c_phi is measured on the
/// range of the canonical dual frame restricted to T0.
/// Throws std::domain_error("no stability guarantee") when saturation >= 1 or
/// c_phi = 0.
StabilityBound stability_constants(const LinearOperator& phi, const LinearOperator& analysis,
                                   const DecomposableNorm& norm, const Subspace& nonsaturated,
                                   const DualCertificate& cert, double c,
                                   std::optional<double> frame_lower_bound = std::nullopt);

/// Direct assembly from the individual constants (guards for c_phi = +inf and
/// an identically zero L_{S0}^* included).
StabilityBound assemble_stability_bound(double c, double eta_norm, double saturation,
                                        double c_phi, double c_l, double c_a, double phi_norm);

/// c1 (2 + c|eta|) + c2 (1 + c|eta|/2)^2 / (c (1 - saturation)); +inf once
/// saturation reaches 1.
double stability_total(double c, double eta_norm, double saturation, double c1, double c2);

struct PredictionBregmanBounds {
  double bregman = 0.0;
  double prediction = 0.0;
};

/// D <= eps (1 + c|eta|/2)^2 / c  and  ||phi x* - phi x0|| <= eps (2 + c|eta|).
PredictionBregmanBounds prediction_bregman_bounds(double epsilon, double c, double eta_norm);

/// ||L_{S0}^*(x* - x0)||_2 <= D / (c_a (1 - saturation)).
double bregman_to_l2(double bregman_value, double saturation, double c_a);

struct BoundCheck {
  double observed = 0.0;
  double bound = 0.0;
  bool pass = false;
};

struct BoundCheckInput {
  double epsilon = 0.0;
  double c = 0.0;
  double lambda = 0.0;      // lambda actually used by the solve
  double noise_norm = 0.0;  // ||w||_2 of the noise in y
};

struct BoundCheckReport {
  bool preconditions_valid = false;
  std::string precondition_note;
  BoundCheck prediction;
  BoundCheck bregman;
  BoundCheck nonsaturated_l2;
  BoundCheck l2;
  bool pass_all() const { return prediction.pass && bregman.pass && nonsaturated_l2.pass && l2.pass; }
};

/// Relative slack on every bound.
inline constexpr double kBoundRelSlack = 1e-6;

/// Compares a solved instance against the bounds. A check passes when
/// observed <= bound (1 + 1e-6) + abs_slack, where abs_slack defaults to a
/// multiple of the solve's optimality residual.
BoundCheckReport verify_bounds(const LinearOperator& phi, const LinearOperator& analysis,
                               const DecomposableNorm& norm, const Vector& x0,
                               const DualCertificate& cert, const Subspace& nonsaturated,
                               const BoundCheckInput& input, const SolveReport& report,
                               const StabilityBound& bound,
                               std::optional<double> abs_slack = std::nullopt);

}  // namespace adp
