#include "adp/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace adp {

namespace {

// min_w ||a + Q w||_* with Q orthonormal, plus the map from w back to the
// stacked (u-coefficients, z-coefficients).
struct ReducedIc {
  Vector a;
  Matrix q;
  Matrix coeff_map;
  Index k1 = 0;
};

ReducedIc reduce(const IcGeometry& g, const Matrix& ps, const LinearOperator& phi, bool with_z) {
  const Index p = g.gamma_e.size();
  const Index k1 = g.u_basis.cols();
  const Index k2 = with_z ? g.z_basis.cols() : 0;
  // Each block is divided by its natural scale (P_S u_basis has norm <= 1;
  // the z block scales with |L_S^+| |phi|) so that the rank cutoff is
  // absolute: directions that vanish in exact arithmetic stay out of Q.
  const double z_scale =
      std::max(std::numeric_limits<double>::min(), g.ls_pinv.norm() * phi.matrix().norm());
  Matrix span(p, k1 + k2);
  if (k1) span.leftCols(k1) = ps * g.u_basis;
  if (k2) span.rightCols(k2) = g.ls_pinv * (phi.matrix().transpose() * g.z_basis) / z_scale;

  ReducedIc r;
  r.a = g.gamma_e;
  r.k1 = k1;
  Index rank = 0;
  Eigen::JacobiSVD<Matrix> svd;
  if (span.cols() > 0) {
    svd.compute(span, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& s = svd.singularValues();
    while (rank < s.size() && s(rank) > kRankCutoff * std::max(1.0, s(0))) ++rank;
  }
  if (rank == 0) {
    r.q.resize(p, 0);
    r.coeff_map.resize(k1 + k2, 0);
    return r;
  }
  const Vector& s = svd.singularValues();
  r.q = svd.matrixU().leftCols(rank);
  r.coeff_map = svd.matrixV().leftCols(rank) * s.head(rank).cwiseInverse().asDiagonal();
  if (k2) r.coeff_map.bottomRows(k2) /= z_scale;
  return r;
}

struct ReducedSolution {
  Vector w;
  double value = 0.0;
  double gap = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Chambolle-Pock on min_w F(a + Q w), F = dual norm, with ||Q|| = 1. The dual
// of F(a + .) is the indicator of the primal unit ball shifted by -<., a>, so
// the dual step is a projection onto the primal ball. Every iterate gives an
// upper bound; projected dual iterates give lower bounds.
ReducedSolution solve_reduced(const DecomposableNorm& norm, const ReducedIc& r, Vector w,
                              const SolverOptions& opts) {
  ReducedSolution best;
  best.w = w;
  best.value = dual_norm_value(norm, r.a + r.q * w);
  if (r.q.cols() == 0) {
    best.converged = true;
    return best;
  }
  double best_dual = -std::numeric_limits<double>::infinity();
  const double step = 0.99;
  Vector p = Vector::Zero(r.a.size());
  const int check_every = std::max(1, opts.check_every);
  int it = 0;
  while (it < opts.max_iter) {
    ++it;
    const Vector w_new = w - step * (r.q.transpose() * p);
    const Vector w_bar = 2.0 * w_new - w;
    w = w_new;
    p = project_norm_ball(norm, p + step * (r.q * w_bar + r.a));
    if (it % check_every == 0 || it == opts.max_iter) {
      const double primal = dual_norm_value(norm, r.a + r.q * w);
      if (primal < best.value) {
        best.value = primal;
        best.w = w;
      }
      Vector feasible = p - r.q * (r.q.transpose() * p);
      const double nf = norm_value(norm, feasible);
      if (nf > 1.0) feasible /= nf;
      best_dual = std::max(best_dual, feasible.dot(r.a));
      if (best.value - best_dual <= opts.tol * std::max(1.0, best.value)) {
        best.converged = true;
        break;
      }
    }
  }
  best.gap = std::max(0.0, best.value - best_dual);
  best.iterations = it;
  return best;
}

IcResult to_result(const IcGeometry& g, const ReducedIc& r, const ReducedSolution& sol,
                   Index m) {
  IcResult out;
  const Vector coeff = r.coeff_map * sol.w;
  out.u = Vector::Zero(g.gamma_e.size());
  out.z = Vector::Zero(m);
  if (r.k1) out.u = g.u_basis * coeff.head(r.k1);
  const Index k2 = coeff.size() - r.k1;
  if (k2) out.z = g.z_basis * coeff.tail(k2);
  out.ic = sol.value;
  out.gap = sol.gap;
  out.iterations = sol.iterations;
  out.converged = sol.converged;
  return out;
}

void check_model(const LinearOperator& phi, const LinearOperator& analysis,
                 const DecomposableNorm& norm, const DecompositionModel& model) {
  require_dims(phi.cols() == analysis.cols(), "IC: phi and L^* act on different spaces");
  require_dims(analysis.rows() == norm.ambient_dim(), "IC: rows(L^*) != norm dimension");
  require_dims(model.e.size() == norm.ambient_dim() &&
                   model.model_space.ambient_dim() == norm.ambient_dim(),
               "IC: model does not live in R^P");
}

}  // namespace

IcGeometry ic_geometry(const LinearOperator& phi, const LinearOperator& analysis,
                       const DecompositionModel& model) {
  const Matrix& d = analysis.matrix();
  const Matrix& a = phi.matrix();
  const Matrix ps = model.complement.projector_matrix();
  const Index n = d.cols();

  IcGeometry g;
  g.ls = d.transpose() * ps;
  g.ls_pinv = pseudoinverse(LinearOperator(g.ls)).matrix();
  const Matrix xi = xi_matrix(phi, ps * d);
  const Vector lte = d.transpose() * model.model_space.project(model.e);
  const Vector inner = a.transpose() * (a * (xi * lte)) - lte;
  g.gamma_e = g.ls_pinv * inner;

  g.u_basis = g.ls.isZero(0.0) ? Matrix::Identity(d.rows(), d.rows())
                               : kernel_basis(LinearOperator(g.ls)).basis();
  const Matrix off_range = (Matrix::Identity(n, n) - g.ls * g.ls_pinv) * a.transpose();
  g.z_basis = off_range.isZero(0.0) ? Matrix::Identity(a.rows(), a.rows())
                                    : kernel_basis(LinearOperator(off_range), 1e-9).basis();
  return g;
}

double ic_value(const LinearOperator& phi, const LinearOperator& analysis,
                const DecomposableNorm& norm, const DecompositionModel& model, const Vector& u,
                const Vector& z) {
  check_model(phi, analysis, norm, model);
  require_dims(u.size() == norm.ambient_dim(), "ic_value: u must live in R^P");
  require_dims(z.size() == phi.rows(), "ic_value: z must live in R^M");
  const IcGeometry g = ic_geometry(phi, analysis, model);
  const double lscale = std::max(1.0, g.ls.norm());
  if ((g.ls * u).norm() > 1e-9 * lscale * std::max(1.0, u.norm())) {
    throw std::invalid_argument("ic_value: u is not in ker(L_S)");
  }
  const Vector phit_z = phi.adjoint_apply(z);
  const Vector off = phit_z - g.ls * (g.ls_pinv * phit_z);
  if (off.norm() > 1e-9 * std::max(1.0, phit_z.norm())) {
    throw std::invalid_argument("ic_value: phi^* z is not in Im(L_S)");
  }
  const Vector v = g.gamma_e + model.complement.project(u) + g.ls_pinv * phit_z;
  return dual_norm_value(norm, v);
}

IcResult minimize_ic_u(const LinearOperator& phi, const LinearOperator& analysis,
                       const DecomposableNorm& norm, const DecompositionModel& model,
                       const SolverOptions& opts) {
  check_model(phi, analysis, norm, model);
  const IcGeometry g = ic_geometry(phi, analysis, model);
  const ReducedIc r = reduce(g, model.complement.projector_matrix(), phi, false);
  const ReducedSolution sol = solve_reduced(norm, r, Vector::Zero(r.q.cols()), opts);
  return to_result(g, r, sol, phi.rows());
}

IcResult minimize_ic_full(const LinearOperator& phi, const LinearOperator& analysis,
                          const DecomposableNorm& norm, const DecompositionModel& model,
                          const SolverOptions& opts) {
  check_model(phi, analysis, norm, model);
  const IcGeometry g = ic_geometry(phi, analysis, model);
  const Matrix ps = model.complement.projector_matrix();

  // Warm start from the z = 0 minimizer, so the full value never exceeds it.
  const ReducedIc ru = reduce(g, ps, phi, false);
  const ReducedSolution su = solve_reduced(norm, ru, Vector::Zero(ru.q.cols()), opts);
  const Vector shift = ru.q * su.w;

  const ReducedIc r = reduce(g, ps, phi, true);
  ReducedSolution sol = solve_reduced(norm, r, r.q.transpose() * shift, opts);
  sol.iterations += su.iterations;
  return to_result(g, r, sol, phi.rows());
}

}  // namespace adp
