#include "adp/experiments.hpp"

#include <cmath>
#include <limits>

namespace adp {

namespace {

Vector subgradient_at(const DecomposableNorm& norm, const Vector& u) {
  Vector s = Vector::Zero(u.size());
  switch (norm.kind()) {
    case NormKind::l1:
      for (Index i = 0; i < u.size(); ++i) s(i) = u(i) > 0.0 ? 1.0 : (u(i) < 0.0 ? -1.0 : 0.0);
      break;
    case NormKind::group:
      for (const auto& blk : norm.blocks()) {
        double nb = 0.0;
        for (Index i : blk) nb += u(i) * u(i);
        nb = std::sqrt(nb);
        if (nb > 0.0)
          for (Index i : blk) s(i) = u(i) / nb;
      }
      break;
    case NormKind::nuclear: {
      const Matrix x = Eigen::Map<const Matrix>(u.data(), norm.nrows(), norm.ncols());
      Eigen::JacobiSVD<Matrix> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
      const Vector& sv = svd.singularValues();
      Matrix g = Matrix::Zero(x.rows(), x.cols());
      for (Index k = 0; k < sv.size(); ++k)
        if (sv(k) > 1e-14 * std::max(1.0, sv(0)))
          g += svd.matrixU().col(k) * svd.matrixV().col(k).transpose();
      s = Eigen::Map<const Vector>(g.data(), g.size());
      break;
    }
  }
  return s;
}

struct Best {
  Vector x;
  double obj = std::numeric_limits<double>::infinity();
  void offer(const Problem& pb, const Vector& cand) {
    const double o = objective(pb, cand);
    if (o < obj) {
      obj = o;
      x = cand;
    }
  }
};

long subgradient_phase(const Problem& pb, const OracleOptions& opts, Best& best) {
  const Matrix& a = pb.phi.matrix();
  const Matrix& d = pb.analysis.matrix();
  const double scale = std::pow(operator_norm(pb.phi), 2) + pb.lambda * operator_norm(pb.analysis);
  const double s0 = 1.0 / std::max(scale, 1e-12);
  Vector x = Vector::Zero(a.cols());
  Vector avg = Vector::Zero(a.cols());
  double weight = 0.0;
  best.offer(pb, x);
  for (long k = 0; k < opts.subgradient_iters; ++k) {
    const Vector g = a.transpose() * (a * x - pb.y) + pb.lambda * (d.transpose() * subgradient_at(pb.norm, d * x));
    const double step = s0 / std::sqrt(1.0 + static_cast<double>(k));
    x -= step * g;
    weight += step;
    avg += (step / weight) * (x - avg);
    if ((k & 63) == 0) {
      best.offer(pb, x);
      best.offer(pb, avg);
    }
  }
  best.offer(pb, x);
  best.offer(pb, avg);
  return opts.subgradient_iters;
}

// ADMM on min 1/2||y - phi x||^2 + lambda ||z||, z = L^* x.
int admm_phase(const Problem& pb, const OracleOptions& opts, const Vector& start, Best& best,
               bool& converged) {
  const Matrix& a = pb.phi.matrix();
  const Matrix& d = pb.analysis.matrix();
  const double ln = operator_norm(pb.analysis);
  const double rho = std::max(1e-3, std::pow(operator_norm(pb.phi), 2)) / std::max(ln * ln, 1e-12);
  const Matrix sys = a.transpose() * a + rho * d.transpose() * d;
  const Eigen::LDLT<Matrix> fact(sys);
  const Vector aty = a.transpose() * pb.y;
  Vector x = start;
  Vector z = d * x;
  Vector w = Vector::Zero(z.size());
  const double scale = 1.0 + aty.norm();
  converged = false;
  int it = 0;
  while (it < opts.admm_iters) {
    ++it;
    x = fact.solve(aty + rho * d.transpose() * (z - w));
    const Vector v = d * x + w;
    const Vector z_old = z;
    z = prox(pb.norm, v, pb.lambda / rho);
    w = v - z;
    const double r = (d * x - z).norm();
    const double s = rho * (d.transpose() * (z - z_old)).norm();
    if (r <= opts.admm_tol * scale && s <= opts.admm_tol * scale) {
      converged = true;
      break;
    }
    if ((it & 255) == 0) best.offer(pb, x);
  }
  best.offer(pb, x);
  return it;
}

// Fixes the sign pattern of L^* x and solves the resulting equality
// constrained least squares problem exactly.
void l1_polish(const Problem& pb, Best& best) {
  const Matrix& a = pb.phi.matrix();
  const Matrix& d = pb.analysis.matrix();
  for (double thr : {1e-6, 1e-9, 1e-12}) {
    const Vector u = d * best.x;
    const double umax = u.cwiseAbs().maxCoeff();
    std::vector<Index> inactive;
    Vector s = Vector::Zero(u.size());
    for (Index i = 0; i < u.size(); ++i) {
      if (std::abs(u(i)) > thr * std::max(umax, 1e-300)) {
        s(i) = u(i) > 0.0 ? 1.0 : -1.0;
      } else {
        inactive.push_back(i);
      }
    }
    Matrix rows(static_cast<Index>(inactive.size()), d.cols());
    for (std::size_t k = 0; k < inactive.size(); ++k) rows.row(static_cast<Index>(k)) = d.row(inactive[k]);
    const Subspace ker = rows.rows() == 0 ? Subspace::full(d.cols()) : kernel_basis(LinearOperator(rows));
    if (ker.is_zero()) {
      best.offer(pb, Vector::Zero(d.cols()));
      continue;
    }
    const Matrix& b = ker.basis();
    const Matrix ab = a * b;
    const Vector rhs = b.transpose() * (a.transpose() * pb.y - pb.lambda * d.transpose() * s);
    const Vector coef = (ab.transpose() * ab).ldlt().solve(rhs);
    best.offer(pb, b * coef);
  }
}

}  // namespace

SolveReport oracle_solve(const Problem& problem, const OracleOptions& opts) {
  validate(problem);
  if (problem.phi.cols() > kOracleMaxDim || problem.analysis.rows() > kOracleMaxDim) {
    throw DimensionError("oracle_solve: N and P must not exceed " + std::to_string(kOracleMaxDim));
  }
  Best best;
  const long sub_iters = subgradient_phase(problem, opts, best);
  bool converged = false;
  const int admm_iters = admm_phase(problem, opts, best.x, best, converged);
  if (problem.norm.kind() == NormKind::l1) l1_polish(problem, best);

  SolveReport rep;
  rep.x_star = best.x;
  rep.objective = best.obj;
  const FirstOrderResidual r = first_order_residual(problem, best.x, nullptr, true);
  rep.optimality_residual = r.residual / (1.0 + problem.phi.adjoint_apply(problem.y).norm());
  rep.alpha = r.alpha;
  rep.iterations = static_cast<int>(std::min<long>(sub_iters + admm_iters, std::numeric_limits<int>::max()));
  rep.converged = converged;
  return rep;
}

}  // namespace adp
