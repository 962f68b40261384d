#include "adp/certificates.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

namespace adp {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  return cells;
}

}  // namespace

std::string to_string(CertificateMode mode) {
  switch (mode) {
    case CertificateMode::full:
      return "full";
    case CertificateMode::u_only:
      return "u_only";
    case CertificateMode::zero:
      return "zero";
  }
  return "unknown";
}

CertificateMode certificate_mode_from_string(const std::string& name) {
  if (name == "full") return CertificateMode::full;
  if (name == "u_only") return CertificateMode::u_only;
  if (name == "zero") return CertificateMode::zero;
  throw std::invalid_argument("unknown certificate mode '" + name +
                              "' (expected full, u_only or zero)");
}

SourceConditionVerdict check_source_condition(const LinearOperator& phi,
                                              const LinearOperator& analysis,
                                              const DecomposableNorm& norm, const Vector& x,
                                              const DualCertificate& cert, double tol) {
  require_dims(cert.eta.size() == phi.rows(), "check_source_condition: len(eta) != M");
  require_dims(cert.alpha.size() == analysis.rows(), "check_source_condition: len(alpha) != P");
  const Vector l_alpha = analysis.adjoint_apply(cert.alpha);
  const double resid = (phi.adjoint_apply(cert.eta) - l_alpha).norm();
  if (resid > tol * (1.0 + l_alpha.norm())) {
    return {false, "range equation phi^* eta = L alpha violated by " + std::to_string(resid)};
  }
  const Membership m = subdiff_membership(norm, analysis.apply(x), cert.alpha, tol);
  if (!m) return {false, "alpha is not a subgradient: " + m.reason};
  return {true, {}};
}

DualCertificate build_certificate(const LinearOperator& phi, const LinearOperator& analysis,
                                  const DecomposableNorm& norm, const DecompositionModel& model,
                                  CertificateMode mode, const SolverOptions& opts) {
  const Matrix& d = analysis.matrix();
  const Matrix ps = model.complement.projector_matrix();
  // Throws InjectivityError when INJ fails on the model.
  const Matrix xi = xi_matrix(phi, ps * d);
  const IcGeometry g = ic_geometry(phi, analysis, model);

  Vector u = Vector::Zero(norm.ambient_dim());
  Vector z = Vector::Zero(phi.rows());
  bool converged = true;
  if (mode != CertificateMode::zero) {
    const IcResult r = mode == CertificateMode::full
                           ? minimize_ic_full(phi, analysis, norm, model, opts)
                           : minimize_ic_u(phi, analysis, norm, model, opts);
    u = r.u;
    z = r.z;
    converged = r.converged;
  }

  const Vector e = model.model_space.project(model.e);
  const Vector lte = d.transpose() * e;
  DualCertificate cert;
  cert.alpha = e + g.gamma_e + model.complement.project(u) +
               g.ls_pinv * phi.adjoint_apply(z);
  cert.eta = phi.apply(xi * lte) + z;
  cert.saturation = dual_norm_value(norm, model.complement.project(cert.alpha));
  cert.source_residual =
      (phi.adjoint_apply(cert.eta) - analysis.adjoint_apply(cert.alpha)).norm();
  cert.converged = converged;
  return cert;
}

double certificate_quality(const DualCertificate& cert) { return 1.0 - cert.saturation; }

void write_certificate_csv(std::ostream& out, const DualCertificate& cert) {
  for (Index i = 0; i < cert.eta.size(); ++i) out << "eta_" << i + 1 << ',';
  for (Index i = 0; i < cert.alpha.size(); ++i) out << "alpha_" << i + 1 << ',';
  out << "saturation,source_residual\n";
  out << std::setprecision(17);
  for (Index i = 0; i < cert.eta.size(); ++i) out << cert.eta(i) << ',';
  for (Index i = 0; i < cert.alpha.size(); ++i) out << cert.alpha(i) << ',';
  out << cert.saturation << ',' << cert.source_residual << '\n';
}

DualCertificate read_certificate_csv(std::istream& in) {
  std::string header;
  std::string data;
  if (!std::getline(in, header) || !std::getline(in, data)) {
    throw std::invalid_argument("certificate csv: expected a header and one record");
  }
  const auto names = split(header);
  const auto cells = split(data);
  if (names.size() != cells.size() || names.size() < 2 ||
      names[names.size() - 2] != "saturation" || names.back() != "source_residual") {
    throw std::invalid_argument("certificate csv: malformed header");
  }
  std::vector<double> eta;
  std::vector<double> alpha;
  for (std::size_t k = 0; k + 2 < names.size(); ++k) {
    const double v = std::stod(cells[k]);
    if (names[k].rfind("eta_", 0) == 0) {
      if (!alpha.empty()) throw std::invalid_argument("certificate csv: eta after alpha");
      eta.push_back(v);
    } else if (names[k].rfind("alpha_", 0) == 0) {
      alpha.push_back(v);
    } else {
      throw std::invalid_argument("certificate csv: unexpected column " + names[k]);
    }
  }
  DualCertificate cert;
  cert.eta = Eigen::Map<Vector>(eta.data(), static_cast<Index>(eta.size()));
  cert.alpha = Eigen::Map<Vector>(alpha.data(), static_cast<Index>(alpha.size()));
  cert.saturation = std::stod(cells[cells.size() - 2]);
  cert.source_residual = std::stod(cells.back());
  return cert;
}

void save_certificate_csv(const std::filesystem::path& path, const DualCertificate& cert) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_certificate_csv(out, cert);
}

}  // namespace adp
