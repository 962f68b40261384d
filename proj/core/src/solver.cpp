#include "adp/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <string>

namespace adp {

namespace {

std::vector<std::vector<Index>> penalty_blocks(const DecomposableNorm& norm) {
  if (norm.kind() == NormKind::group) return norm.blocks();
  std::vector<std::vector<Index>> singletons(static_cast<std::size_t>(norm.ambient_dim()));
  for (Index i = 0; i < norm.ambient_dim(); ++i) singletons[static_cast<std::size_t>(i)] = {i};
  return singletons;
}

Matrix select_rows(const Matrix& m, const std::vector<Index>& rows) {
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Index>(k)) = m.row(rows[k]);
  return out;
}

// Exact minimization of the objective over {x : (L^* x)_b = 0 for inactive
// blocks b}, on which the penalty is smooth as long as active blocks stay
// nonzero. Damped Newton in kernel coordinates; gives up when phi is not
// injective on the model or an active block collapses.
std::optional<Vector> polish_on_active_set(const Problem& p,
                                           const std::vector<std::vector<Index>>& blocks,
                                           const std::vector<bool>& active, const Vector& x) {
  const Matrix& a = p.phi.matrix();
  const Matrix& d = p.analysis.matrix();
  const Index n = a.cols();

  std::vector<Index> inactive_rows;
  for (std::size_t b = 0; b < blocks.size(); ++b)
    if (!active[b]) inactive_rows.insert(inactive_rows.end(), blocks[b].begin(), blocks[b].end());

  Matrix basis = Matrix::Identity(n, n);
  if (!inactive_rows.empty()) {
    const Matrix ds = select_rows(d, inactive_rows);
    basis = kernel_basis(LinearOperator(ds)).basis();
  }
  const Index k = basis.cols();
  if (k == 0) return Vector::Zero(n);

  const Matrix pb = a * basis;
  const Matrix h0 = pb.transpose() * pb;
  const Vector b0 = pb.transpose() * p.y;
  std::vector<Matrix> g;
  for (std::size_t b = 0; b < blocks.size(); ++b)
    if (active[b]) g.push_back(select_rows(d, blocks[b]) * basis);

  auto value = [&](const Vector& z) {
    double penalty = 0.0;
    for (const auto& gb : g) penalty += (gb * z).norm();
    return 0.5 * (pb * z - p.y).squaredNorm() + p.lambda * penalty;
  };

  Vector z = basis.transpose() * x;
  const double scale = 1.0 + z.norm();
  for (int it = 0; it < 100; ++it) {
    Vector grad = h0 * z - b0;
    Matrix hess = h0;
    for (const auto& gb : g) {
      const Vector v = gb * z;
      const double nv = v.norm();
      if (nv <= 1e-14 * scale) return std::nullopt;
      const Vector nvec = v / nv;
      grad += p.lambda * gb.transpose() * nvec;
      const Matrix curv =
          (Matrix::Identity(v.size(), v.size()) - nvec * nvec.transpose()) / nv;
      hess += p.lambda * gb.transpose() * curv * gb;
    }
    Eigen::LLT<Matrix> llt(hess);
    if (llt.info() != Eigen::Success || llt.rcond() < 1e-13) return std::nullopt;
    const Vector dz = -llt.solve(grad);
    const double f0 = value(z);
    const double slope = grad.dot(dz);
    double t = 1.0;
    while (t > 1e-12 && value(z + t * dz) > f0 + 1e-4 * t * slope + 1e-15 * std::abs(f0)) t *= 0.5;
    if (t <= 1e-12) break;
    z += t * dz;
    if (t * dz.norm() <= 1e-15 * (1.0 + z.norm())) break;
  }
  return Vector(basis * z);
}

// Zeroes the parts of u (entries, blocks or singular values) at or below thr.
Vector truncate_small(const DecomposableNorm& norm, const Vector& u, double thr) {
  Vector out = u;
  switch (norm.kind()) {
    case NormKind::l1:
      for (Index i = 0; i < out.size(); ++i)
        if (std::abs(out(i)) <= thr) out(i) = 0.0;
      break;
    case NormKind::group:
      for (const auto& b : norm.blocks()) {
        double s = 0.0;
        for (Index i : b) s += u(i) * u(i);
        if (std::sqrt(s) <= thr)
          for (Index i : b) out(i) = 0.0;
      }
      break;
    case NormKind::nuclear: {
      const Eigen::Map<const Matrix> mat(u.data(), norm.nrows(), norm.ncols());
      Eigen::JacobiSVD<Matrix> svd(mat, Eigen::ComputeThinU | Eigen::ComputeThinV);
      Vector sv = svd.singularValues();
      for (Index i = 0; i < sv.size(); ++i)
        if (sv(i) <= thr) sv(i) = 0.0;
      const Matrix back = svd.matrixU() * sv.asDiagonal() * svd.matrixV().transpose();
      out = Eigen::Map<const Vector>(back.data(), back.size());
      break;
    }
  }
  return out;
}

std::string signature(const std::vector<bool>& active) {
  std::string s(active.size(), '0');
  for (std::size_t i = 0; i < active.size(); ++i)
    if (active[i]) s[i] = '1';
  return s;
}

}  // namespace

void validate(const Problem& problem) {
  require_dims(problem.y.size() == problem.phi.rows(), "Problem: len(y) != rows(phi)");
  require_dims(problem.analysis.cols() == problem.phi.cols(),
               "Problem: phi and L^* act on different spaces");
  require_dims(problem.analysis.rows() == problem.norm.ambient_dim(),
               "Problem: rows(L^*) != norm dimension");
  if (!(problem.lambda > 0.0)) throw std::invalid_argument("Problem: lambda must be positive");
  const LinearOperator k = stack(problem.phi, problem.analysis);
  if (restricted_injectivity_constant(k, Subspace::full(k.cols())) == 0.0) {
    throw InjectivityError("Problem: ker(phi) and ker(L^*) intersect nontrivially");
  }
}

Problem make_problem(LinearOperator phi, LinearOperator analysis, DecomposableNorm norm, Vector y,
                     double lambda) {
  Problem p{std::move(phi), std::move(analysis), std::move(norm), std::move(y), lambda};
  validate(p);
  return p;
}

double objective(const Problem& problem, const Vector& x) {
  return 0.5 * (problem.y - problem.phi.apply(x)).squaredNorm() +
         problem.lambda * norm_value(problem.norm, problem.analysis.apply(x));
}

FirstOrderResidual first_order_residual(const Problem& problem, const Vector& x,
                                        const Vector* hint, bool least_squares_readout) {
  const Matrix& a = problem.phi.matrix();
  const Matrix& d = problem.analysis.matrix();
  const Vector u = d * x;
  const Vector g = a.transpose() * (a * x - problem.y);

  FirstOrderResidual best{std::numeric_limits<double>::infinity(), Vector()};
  auto read_model = [&](const DecompositionModel& model) {
    const Vector base = g + problem.lambda * (d.transpose() * model.e);
    if (base.norm() < best.residual) best = {base.norm(), model.e};
    auto consider = [&](const Vector& alpha_s) {
      const Vector alpha = model.e + project_dual_ball(problem.norm, alpha_s);
      const double r = (g + problem.lambda * (d.transpose() * alpha)).norm();
      if (r < best.residual) best = {r, alpha};
    };
    if (model.complement.is_zero()) return;
    if (hint != nullptr) consider(model.complement.project(*hint));
    if (least_squares_readout) {
      const Matrix ls = d.transpose() * model.complement.basis();
      const Vector c = Eigen::CompleteOrthogonalDecomposition<Matrix>(ls).solve(
          Vector(-base / problem.lambda));
      consider(model.complement.basis() * c);
    }
  };

  // Iterates carry round-off sized parts that belong to S at the solution;
  // read the subgradient off progressively cleaned copies of L^* x as well.
  read_model(decompose_at(problem.norm, u));
  const double unit = d.norm() * std::max(1.0, x.norm());
  for (double rel : {1e-12, 1e-10, 1e-8, 1e-6}) {
    const Vector clean = truncate_small(problem.norm, u, rel * unit);
    if (clean == u) continue;
    read_model(decompose_at(problem.norm, clean));
  }
  return best;
}

SolveReport solve_penalized(const Problem& problem, const SolverOptions& opts) {
  validate(problem);
  if (opts.max_iter < 1) throw std::invalid_argument("solve_penalized: max_iter must be >= 1");
  if (!(opts.tol > 0.0)) throw std::invalid_argument("solve_penalized: tol must be positive");

  const Matrix& a = problem.phi.matrix();
  const Matrix& d = problem.analysis.matrix();
  const double lambda = problem.lambda;
  const Index n = a.cols();

  const double knorm = operator_norm_power(stack(problem.phi, problem.analysis));
  const double tau = 0.99 / knorm;
  const double sigma = 0.99 / knorm;
  const double scale = 1.0 + (a.transpose() * problem.y).norm();
  const double target = opts.tol * scale;

  Vector x = Vector::Zero(n);
  if (opts.random_start_seed) {
    std::mt19937_64 rng(*opts.random_start_seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double amp = std::max(1.0, problem.y.norm()) / std::sqrt(static_cast<double>(n));
    for (Index i = 0; i < n; ++i) x(i) = amp * gauss(rng);
  }
  Vector p1 = Vector::Zero(a.rows());
  Vector p2 = Vector::Zero(d.rows());

  Vector best_x = x;
  FirstOrderResidual best{std::numeric_limits<double>::infinity(), Vector()};
  auto offer = [&](const Vector& cand, const Vector* hint, bool ls) {
    FirstOrderResidual r = first_order_residual(problem, cand, hint, ls);
    if (r.residual < best.residual) {
      best = std::move(r);
      best_x = cand;
    }
  };

  const bool can_polish = opts.polish && problem.norm.kind() != NormKind::nuclear;
  const auto blocks = can_polish ? penalty_blocks(problem.norm) : std::vector<std::vector<Index>>{};
  std::set<std::string> tried;
  auto try_polish = [&](const Vector& from) {
    const Vector u = d * from;
    std::vector<double> bn(blocks.size());
    double bmax = 0.0;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      double s = 0.0;
      for (Index i : blocks[b]) s += u(i) * u(i);
      bn[b] = std::sqrt(s);
      bmax = std::max(bmax, bn[b]);
    }
    // A zero threshold stands for the empty active set.
    for (double thr : {1e-2, 1e-4, 1e-6, 1e-8, 0.0}) {
      std::vector<bool> active(blocks.size());
      for (std::size_t b = 0; b < blocks.size(); ++b)
        active[b] = thr > 0.0 && bmax > 0.0 && bn[b] > thr * bmax;
      if (!tried.insert(signature(active)).second) continue;
      if (auto cand = polish_on_active_set(problem, blocks, active, from)) {
        offer(*cand, nullptr, true);
      }
    }
  };

  offer(x, nullptr, false);
  int it = 0;
  int next_polish = 50;
  const int check_every = std::max(1, opts.check_every);
  while (best.residual > target && it < opts.max_iter) {
    ++it;
    const Vector x_new = x - tau * (a.transpose() * p1 + d.transpose() * p2);
    const Vector x_bar = 2.0 * x_new - x;
    x = x_new;
    p1 = (p1 + sigma * (a * x_bar - problem.y)) / (1.0 + sigma);
    p2 = project_dual_ball(problem.norm, p2 + sigma * (d * x_bar), lambda);

    if (it % check_every == 0 || it == opts.max_iter) {
      const Vector hint = p2 / lambda;
      offer(x, &hint, false);
      if (can_polish && best.residual > target && it >= next_polish) {
        try_polish(x);
        next_polish *= 2;
      }
    }
  }
  if (best.residual > target) {
    const Vector hint = p2 / lambda;
    offer(x, &hint, true);
    if (can_polish) try_polish(x);
  }
  // The least-squares readout can only lower the residual of the returned point.
  if (best.residual > 0.0) {
    FirstOrderResidual ls = first_order_residual(problem, best_x, nullptr, true);
    if (ls.residual < best.residual) best = std::move(ls);
  }

  SolveReport report;
  report.x_star = best_x;
  report.objective = objective(problem, best_x);
  report.optimality_residual = best.residual / scale;
  report.iterations = it;
  report.converged = best.residual <= target;
  report.alpha = best.alpha;
  return report;
}

Matrix xi_matrix(const LinearOperator& phi, const Matrix& l_s_adjoint) {
  require_dims(l_s_adjoint.cols() == phi.cols(), "xi: L_S^* and phi act on different spaces");
  const Index n = phi.cols();
  const Subspace ker = l_s_adjoint.isZero(0.0) ? Subspace::full(n)
                                                : kernel_basis(LinearOperator(l_s_adjoint));
  if (ker.is_zero()) return Matrix::Zero(n, n);
  if (restricted_injectivity_constant(phi, ker) == 0.0) {
    throw InjectivityError("xi: phi is not injective on ker(L_S^*)");
  }
  const Matrix& b = ker.basis();
  const Matrix pb = phi.matrix() * b;
  const Matrix gram = pb.transpose() * pb;
  return b * Eigen::LLT<Matrix>(gram).solve(b.transpose());
}

Vector xi_map(const LinearOperator& phi, const LinearOperator& l_s_adjoint, const Vector& h) {
  require_dims(h.size() == phi.cols(), "xi_map: dimension mismatch");
  return xi_matrix(phi, l_s_adjoint.matrix()) * h;
}

Matrix gamma_matrix(const LinearOperator& phi, const LinearOperator& analysis, const Subspace& t,
                    const Subspace& s) {
  require_dims(t.ambient_dim() == analysis.rows() && s.ambient_dim() == analysis.rows(),
               "gamma: subspaces must live in the range of L^*");
  require_dims(phi.cols() == analysis.cols(), "gamma: phi and L^* act on different spaces");
  const Matrix& d = analysis.matrix();
  const Matrix ps = s.projector_matrix();
  const Matrix lt = d.transpose() * t.projector_matrix();
  const Matrix ls = d.transpose() * ps;
  const Matrix xi = xi_matrix(phi, ps * d);
  const Index n = phi.cols();
  const Matrix inner =
      (phi.matrix().transpose() * (phi.matrix() * xi) - Matrix::Identity(n, n)) * lt;
  return pseudoinverse(LinearOperator(ls)).matrix() * inner;
}

Vector gamma_apply(const LinearOperator& phi, const LinearOperator& analysis, const Subspace& t,
                   const Subspace& s, const Vector& v) {
  require_dims(v.size() == analysis.rows(), "gamma_apply: dimension mismatch");
  return gamma_matrix(phi, analysis, t, s) * v;
}

}  // namespace adp
