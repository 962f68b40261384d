#pragma once

// Dual certificates (eta, alpha) for the source condition
//
//     phi^* eta = L alpha,   alpha in d||.||(L^* x),
//
// their validation, and their explicit construction from the minimizers of the
// irrepresentability coefficient.

#include "adp/linops.hpp"
#include "adp/norms.hpp"
#include "adp/solver.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>

namespace adp {

/// Relative tolerance on the range equation phi^* eta = L alpha.
inline constexpr double kCertificateTol = 1e-7;

struct DualCertificate {
  Vector eta;    // M
  Vector alpha;  // P
  double saturation = 0.0;       // ||P_S alpha||_* for the model's S
  double source_residual = 0.0;  // ||phi^* eta - L alpha||_2
  /// False when the IC program that produced the certificate did not reach
  /// its tolerance.
  bool converged = true;

  /// saturation < 1: the certificate carries uniqueness / stability
  /// guarantees. Certificates with saturation >= 1 are still returned.
  bool has_guarantee() const { return saturation < 1.0; }
};

enum class CertificateMode { full, u_only, zero };

std::string to_string(CertificateMode mode);
CertificateMode certificate_mode_from_string(const std::string& name);

struct SourceConditionVerdict {
  bool valid = false;
  std::string reason;
  explicit operator bool() const { return valid; }
};

/// Valid iff ||phi^* eta - L alpha|| <= tol (1 + ||L alpha||) and alpha is a
/// subgradient of the norm at L^* x.
SourceConditionVerdict check_source_condition(const LinearOperator& phi,
                                              const LinearOperator& analysis,
                                              const DecomposableNorm& norm, const Vector& x,
                                              const DualCertificate& cert,
                                              double tol = kCertificateTol);

/// alpha = e + Gamma e + u_S + (L_S)^+ phi^* z and eta = phi Xi L_T e + z,
/// with (u, z) the IC minimizers for `mode` ((0, 0) for mode zero). Throws
/// InjectivityError when phi is not injective on ker(L_S^*).
DualCertificate build_certificate(const LinearOperator& phi, const LinearOperator& analysis,
                                  const DecomposableNorm& norm, const DecompositionModel& model,
                                  CertificateMode mode, const SolverOptions& opts = {});

/// 1 - saturation, the margin entering the stability constant.
double certificate_quality(const DualCertificate& cert);

// One-record CSV: header eta_1..eta_M,alpha_1..alpha_P,saturation,source_residual
// followed by a single data line.
void write_certificate_csv(std::ostream& out, const DualCertificate& cert);
DualCertificate read_certificate_csv(std::istream& in);
void save_certificate_csv(const std::filesystem::path& path, const DualCertificate& cert);

}  // namespace adp
