#pragma once

// Primal-dual (Chambolle-Pock) solver for
//
//     min_x  1/2 ||y - phi x||^2 + lambda ||L^* x||
//
// together with the restricted least-squares map Xi, the operator Gamma and
// the two convex programs that minimize the irrepresentability coefficient.
//
// Throughout, `analysis` is the analysis operator L^*: R^N -> R^P stored as a
// P x N matrix; the synthesis side L is its transpose.

#include "adp/linops.hpp"
#include "adp/norms.hpp"

#include <cstdint>
#include <optional>

namespace adp {

struct Problem {
  LinearOperator phi;       // M x N
  LinearOperator analysis;  // P x N
  DecomposableNorm norm;    // on R^P
  Vector y;                 // M
  double lambda;
};

/// Checks dimensions, lambda > 0 and ker(phi) /\ ker(L^*) = {0} (the condition
/// under which the minimizer set is non-empty and compact).
void validate(const Problem& problem);
Problem make_problem(LinearOperator phi, LinearOperator analysis, DecomposableNorm norm, Vector y,
                     double lambda);

struct SolverOptions {
  double tol = 1e-9;
  int max_iter = 200000;
  /// Residual readout period, in iterations.
  int check_every = 20;
  /// Start from a random point instead of zero.
  std::optional<std::uint64_t> random_start_seed;
  /// Try exact active-set refinement for l1 / group norms.
  bool polish = true;
};

struct SolveReport {
  Vector x_star;
  double objective = 0.0;
  /// ||phi^*(phi x - y) + lambda L alpha||_2 / (1 + ||phi^* y||_2) for the
  /// best subgradient alpha found at x_star.
  double optimality_residual = 0.0;
  int iterations = 0;
  bool converged = false;
  Vector alpha;  // subgradient achieving the residual
};

double objective(const Problem& problem, const Vector& x);

struct FirstOrderResidual {
  double residual = 0.0;  // absolute, unnormalized
  Vector alpha;
};

/// Builds a subgradient alpha in d||.||(L^* x) from the model at L^* x (its T
/// component is e) and the S component of `hint` projected on the dual ball,
/// and optionally from a least-squares fit; returns the smallest first-order
/// residual ||phi^*(phi x - y) + lambda L alpha||_2 among the candidates.
FirstOrderResidual first_order_residual(const Problem& problem, const Vector& x,
                                        const Vector* hint, bool least_squares_readout);

SolveReport solve_penalized(const Problem& problem, const SolverOptions& opts = {});

/// Xi h = argmin_{x in ker(l_s_adjoint)} 1/2 ||phi x||^2 - <h, x>, returned as
/// the N x N matrix B (B^T phi^T phi B)^{-1} B^T. Throws InjectivityError when
/// phi is not injective on ker(l_s_adjoint).
Matrix xi_matrix(const LinearOperator& phi, const Matrix& l_s_adjoint);
Vector xi_map(const LinearOperator& phi, const LinearOperator& l_s_adjoint, const Vector& h);

/// Gamma = (L_S)^+ (phi^* phi Xi - Id) L_T, a P x P matrix.
Matrix gamma_matrix(const LinearOperator& phi, const LinearOperator& analysis, const Subspace& t,
                    const Subspace& s);
Vector gamma_apply(const LinearOperator& phi, const LinearOperator& analysis, const Subspace& t,
                   const Subspace& s, const Vector& v);

/// Precomputed pieces shared by the IC quantities for one model (T, e).
struct IcGeometry {
  Matrix ls;        // L_S = L P_S            (N x P)
  Matrix ls_pinv;   // (L_S)^+               (P x N)
  Vector gamma_e;   // Gamma e               (P)
  Matrix u_basis;   // orthonormal ker(L_S)  (P x k1)
  Matrix z_basis;   // orthonormal {z : phi^* z in Im(L_S)}  (M x k2)
};

IcGeometry ic_geometry(const LinearOperator& phi, const LinearOperator& analysis,
                       const DecompositionModel& model);

/// ||Gamma e + u_S + (L_S)^+ phi^* z||_*. Throws std::invalid_argument naming
/// the violated membership when u is not in ker(L_S) or phi^* z not in Im(L_S).
double ic_value(const LinearOperator& phi, const LinearOperator& analysis,
                const DecomposableNorm& norm, const DecompositionModel& model, const Vector& u,
                const Vector& z);

struct IcResult {
  Vector u;  // P
  Vector z;  // M
  double ic = 0.0;
  double gap = 0.0;  // primal-dual gap certificate of the returned value
  int iterations = 0;
  bool converged = false;
};

/// Minimizes IC over u in ker(L_S) and z with phi^* z in Im(L_S).
IcResult minimize_ic_full(const LinearOperator& phi, const LinearOperator& analysis,
                          const DecomposableNorm& norm, const DecompositionModel& model,
                          const SolverOptions& opts = {});
/// Minimizes IC over u in ker(L_S) with z = 0.
IcResult minimize_ic_u(const LinearOperator& phi, const LinearOperator& analysis,
                       const DecomposableNorm& norm, const DecompositionModel& model,
                       const SolverOptions& opts = {});

}  // namespace adp
