#include "adp/guarantees.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace adp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// A subgradient of the norm at u (zero at u = 0).
Vector some_subgradient(const DecomposableNorm& norm, const Vector& u) {
  switch (norm.kind()) {
    case NormKind::l1:
      return u.unaryExpr([](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
    case NormKind::group: {
      Vector s = Vector::Zero(u.size());
      for (const auto& blk : norm.blocks()) {
        double nb = 0.0;
        for (Index i : blk) nb += u(i) * u(i);
        nb = std::sqrt(nb);
        if (nb > 0.0)
          for (Index i : blk) s(i) = u(i) / nb;
      }
      return s;
    }
    case NormKind::nuclear:
      return decompose_at(norm, u, kRankCutoff).e;
  }
  return Vector::Zero(u.size());
}

Subspace kernel_or_full(const Matrix& m) {
  if (m.isZero(0.0)) return Subspace::full(m.cols());
  return kernel_basis(LinearOperator(m));
}

UniquenessVerdict classify(double min_gap, const Vector& witness, double margin, bool exact) {
  UniquenessVerdict v;
  v.min_gap = min_gap;
  if (min_gap <= 0.0) {
    v.status = UniquenessStatus::violated;
    v.witness = witness;
  } else if (min_gap > margin) {
    v.status = exact ? UniquenessStatus::unique_certified : UniquenessStatus::unique_up_to_sampling;
  } else {
    v.status = UniquenessStatus::undecided;
  }
  return v;
}

}  // namespace

std::string to_string(UniquenessStatus status) {
  switch (status) {
    case UniquenessStatus::unique_certified:
      return "unique_certified";
    case UniquenessStatus::unique_up_to_sampling:
      return "unique_up_to_sampling";
    case UniquenessStatus::undecided:
      return "undecided";
    case UniquenessStatus::violated:
      return "violated";
  }
  return "unknown";
}

UniquenessVerdict strong_nsp_check(const LinearOperator& phi, const LinearOperator& analysis,
                                   const DecompositionModel& model, const DecomposableNorm& norm,
                                   const NspOptions& opts) {
  require_dims(phi.cols() == analysis.cols(), "strong_nsp_check: phi and L^* differ in domain");
  require_dims(analysis.rows() == norm.ambient_dim(), "strong_nsp_check: rows(L^*) != P");
  const Subspace ker = kernel_basis(phi);
  if (ker.is_zero()) {
    UniquenessVerdict v;
    v.status = UniquenessStatus::unique_certified;
    v.min_gap = kInf;
    return v;
  }
  const Matrix& d = analysis.matrix();
  const Matrix ps = model.complement.projector_matrix();
  const Vector e_t = model.model_space.project(model.e);
  // gap(h) = ||P_S L^* h|| - <L^* h, e_T>, positively homogeneous in h.
  const Matrix ls_k = ps * d * ker.basis();
  const Vector le_k = ker.basis().transpose() * (d.transpose() * e_t);
  auto gap = [&](const Vector& v) { return norm_value(norm, ls_k * v) - le_k.dot(v); };

  const Index k = ker.dim();
  if (k == 1) {
    const Vector plus = Vector::Ones(1);
    const Vector minus = -plus;
    const double gp = gap(plus);
    const double gm = gap(minus);
    const bool use_plus = gp <= gm;
    return classify(std::min(gp, gm), ker.basis() * (use_plus ? plus : minus), opts.margin, true);
  }

  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double lip = std::max(1e-12, (ls_k.norm() + le_k.norm()));
  double best = kInf;
  Vector best_v = Vector::Unit(k, 0);
  for (int r = 0; r < std::max(1, opts.restarts); ++r) {
    Vector v(k);
    for (Index i = 0; i < k; ++i) v(i) = gauss(rng);
    v.normalize();
    for (int it = 0; it < opts.iterations; ++it) {
      const double g = gap(v);
      if (g < best) {
        best = g;
        best_v = v;
      }
      const Vector sub = ls_k.transpose() * some_subgradient(norm, ls_k * v) - le_k;
      const Vector tangent = sub - sub.dot(v) * v;
      if (tangent.norm() == 0.0) break;
      v -= (0.5 / (lip * std::sqrt(1.0 + it))) * tangent;
      v.normalize();
    }
  }
  return classify(best, ker.basis() * best_v, opts.margin, false);
}

UniquenessVerdict uniqueness_from_certificate(const DualCertificate& cert, double c_phi) {
  UniquenessVerdict v;
  v.min_gap = 1.0 - cert.saturation;
  v.status = cert.saturation < 1.0 && c_phi > 0.0 ? UniquenessStatus::unique_certified
                                                  : UniquenessStatus::undecided;
  return v;
}

UniquenessVerdict separable_uniqueness(const DualCertificate& cert, const DecompositionModel& model,
                                       const Subspace& v, const Subspace& w,
                                       const DecomposableNorm& norm, const LinearOperator& phi,
                                       const LinearOperator& analysis) {
  if (!norm.separable()) {
    throw std::invalid_argument("separable_uniqueness: " + to_string(norm.kind()) +
                                " norm is not separable");
  }
  if (!is_separable_split(norm, model.complement, v, w)) {
    throw std::invalid_argument("separable_uniqueness: V and W do not split S along the norm's "
                                "coordinates/blocks");
  }
  const double sat_v = dual_norm_value(norm, v.project(cert.alpha));
  const Matrix lv = v.projector_matrix() * analysis.matrix();
  const double c_phi = restricted_injectivity_constant(phi, kernel_or_full(lv));
  UniquenessVerdict out;
  out.min_gap = 1.0 - sat_v;
  out.status = sat_v < 1.0 && c_phi > 0.0 ? UniquenessStatus::unique_certified
                                          : UniquenessStatus::undecided;
  return out;
}

double stability_total(double c, double eta_norm, double saturation, double c1, double c2) {
  if (saturation >= 1.0) return kInf;
  const double q = 1.0 + c * eta_norm / 2.0;
  return c1 * (2.0 + c * eta_norm) + c2 * q * q / (c * (1.0 - saturation));
}

StabilityBound assemble_stability_bound(double c, double eta_norm, double saturation,
                                        double c_phi, double c_l, double c_a, double phi_norm) {
  StabilityBound b;
  b.c = c;
  b.eta_norm = eta_norm;
  b.saturation = saturation;
  b.c_phi = c_phi;
  b.c_l = c_l;
  b.c_a = c_a;
  b.phi_norm = phi_norm;
  // c_phi = inf: the injectivity subspace is {0} and the first term vanishes.
  b.c1 = std::isinf(c_phi) ? 0.0 : 1.0 / c_phi;
  if (!(c_l > 0.0)) {
    b.c2 = 0.0;  // L_{S0}^* == 0: nothing to control outside the kernel
  } else if (std::isinf(c_phi)) {
    b.c2 = 1.0 / (c_l * c_a);
  } else {
    b.c2 = (phi_norm + c_phi) / (c_l * c_phi * c_a);
  }
  b.total_c = stability_total(c, eta_norm, saturation, b.c1, b.c2);
  return b;
}

StabilityBound stability_constants(const LinearOperator& phi, const LinearOperator& analysis,
                                   const DecomposableNorm& norm, const Subspace& nonsaturated,
                                   const DualCertificate& cert, double c,
                                   std::optional<double> frame_lower_bound) {
  if (!(c > 0.0)) throw std::invalid_argument("stability_constants: c must be positive");
  require_dims(nonsaturated.ambient_dim() == analysis.rows(),
               "stability_constants: subspace must live in R^P");
  const double saturation = dual_norm_value(norm, nonsaturated.project(cert.alpha));
  if (saturation >= 1.0) {
    throw std::domain_error("no stability guarantee: saturation " + std::to_string(saturation) +
                            " >= 1");
  }
  const Matrix& d = analysis.matrix();
  const Matrix l_ns = nonsaturated.projector_matrix() * d;

  double c_phi = 0.0;
  double c_l = 0.0;
  if (frame_lower_bound) {
    const double a = *frame_lower_bound;
    if (!(a > 0.0)) throw std::invalid_argument("frame mode: lower bound must be positive");
    const Matrix gram = d.transpose() * d;
    const double lmin = Eigen::SelfAdjointEigenSolver<Matrix>(gram).eigenvalues()(0);
    if (lmin < a * (1.0 - 1e-9)) {
      throw std::invalid_argument("frame mode: " + std::to_string(a) +
                                  " is not a lower frame bound (smallest eigenvalue of L L^* is " +
                                  std::to_string(lmin) + ")");
    }
    // Canonical dual frame (L L^*)^{-1} L restricted to T0.
    const Matrix dual_frame = Eigen::LLT<Matrix>(gram).solve(d.transpose());
    const Matrix restricted = dual_frame * nonsaturated.orthogonal_complement().projector_matrix();
    const Subspace img = restricted.isZero(0.0) ? Subspace::zero(d.cols())
                                                : range_basis(LinearOperator(restricted));
    c_phi = restricted_injectivity_constant(phi, img);
    c_l = std::sqrt(a);
  } else {
    c_phi = restricted_injectivity_constant(phi, kernel_or_full(l_ns));
    c_l = l_ns.isZero(0.0) ? 0.0 : smallest_nonzero_singular_value(LinearOperator(l_ns));
  }
  if (c_phi == 0.0) throw std::domain_error("no stability guarantee: restricted injectivity fails");

  StabilityBound b = assemble_stability_bound(c, cert.eta.norm(), saturation, c_phi, c_l,
                                              coercivity_constant(norm), operator_norm(phi));
  b.frame_mode = frame_lower_bound.has_value();
  return b;
}

PredictionBregmanBounds prediction_bregman_bounds(double epsilon, double c, double eta_norm) {
  if (!(c > 0.0)) throw std::invalid_argument("prediction_bregman_bounds: c must be positive");
  if (epsilon < 0.0) throw std::invalid_argument("prediction_bregman_bounds: epsilon < 0");
  const double q = 1.0 + c * eta_norm / 2.0;
  return {epsilon * q * q / c, epsilon * (2.0 + c * eta_norm)};
}

double bregman_to_l2(double bregman_value, double saturation, double c_a) {
  if (saturation >= 1.0) throw std::domain_error("bregman_to_l2: saturation >= 1");
  if (!(c_a > 0.0)) throw std::invalid_argument("bregman_to_l2: c_a must be positive");
  if (bregman_value < 0.0) throw std::invalid_argument("bregman_to_l2: negative Bregman value");
  return bregman_value / (c_a * (1.0 - saturation));
}

BoundCheckReport verify_bounds(const LinearOperator& phi, const LinearOperator& analysis,
                               const DecomposableNorm& norm, const Vector& x0,
                               const DualCertificate& cert, const Subspace& nonsaturated,
                               const BoundCheckInput& input, const SolveReport& report,
                               const StabilityBound& bound, std::optional<double> abs_slack) {
  BoundCheckReport out;
  std::string note;
  const double expected_lambda = input.c * input.epsilon;
  if (std::abs(input.lambda - expected_lambda) > 1e-12 * std::max(1.0, expected_lambda)) {
    note += "lambda != c*epsilon; ";
  }
  if (input.noise_norm > input.epsilon * (1.0 + 1e-12)) note += "noise exceeds epsilon; ";
  if (!(bound.saturation < 1.0)) note += "saturation >= 1; ";
  if (!(bound.c_phi > 0.0)) note += "restricted injectivity fails; ";
  if (!(input.c > 0.0)) note += "c <= 0; ";
  const SourceConditionVerdict sc = check_source_condition(phi, analysis, norm, x0, cert);
  if (!sc) note += "certificate invalid (" + sc.reason + "); ";
  out.preconditions_valid = note.empty();
  out.precondition_note = note;

  const double slack = abs_slack.value_or(1e-9 + 100.0 * report.optimality_residual);
  auto judge = [&](double observed, double bnd) {
    return BoundCheck{observed, bnd, observed <= bnd * (1.0 + kBoundRelSlack) + slack};
  };

  const Vector diff = report.x_star - x0;
  const Vector u_star = analysis.apply(report.x_star);
  const Vector u0 = analysis.apply(x0);

  if (!(input.c > 0.0)) {
    out.prediction = out.bregman = out.nonsaturated_l2 = out.l2 = BoundCheck{0.0, kInf, false};
    return out;
  }
  const PredictionBregmanBounds pb = prediction_bregman_bounds(input.epsilon, input.c, bound.eta_norm);
  out.prediction = judge(phi.apply(diff).norm(), pb.prediction);

  double breg = kInf;
  if (sc) breg = bregman(norm, u_star, u0, cert.alpha);
  out.bregman = judge(breg, pb.bregman);

  const double ls_bound = bound.saturation < 1.0
                              ? bregman_to_l2(pb.bregman, bound.saturation, bound.c_a)
                              : kInf;
  out.nonsaturated_l2 = judge(nonsaturated.project(u_star - u0).norm(), ls_bound);
  out.l2 = judge(diff.norm(), bound.total_c * input.epsilon);
  return out;
}

}  // namespace adp
