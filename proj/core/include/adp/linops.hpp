#pragma once

// Dense linear-operator algebra used by every other module: operators with
// exact adjoints, orthonormal subspaces and their projectors, pseudoinverses
// and the spectral constants that enter the stability bounds.

#include <Eigen/Dense>

#include <filesystem>
#include <iosfwd>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace adp {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Singular values at or below kRankCutoff * sigma_max are treated as zero.
inline constexpr double kRankCutoff = 1e-10;

/// Returned by restricted_injectivity_constant for the zero subspace.
inline constexpr double kVacuousInjectivity = std::numeric_limits<double>::infinity();

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a restricted-injectivity assumption needed by a construction
/// does not hold.
class InjectivityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

void require_dims(bool ok, const std::string& what);

class LinearOperator {
 public:
  explicit LinearOperator(Matrix entries);

  static LinearOperator identity(Index n);
  static LinearOperator zero(Index rows, Index cols);
  static LinearOperator diagonal(const Vector& d);

  Index rows() const { return entries_.rows(); }
  Index cols() const { return entries_.cols(); }
  const Matrix& matrix() const { return entries_; }

  Vector apply(const Vector& x) const;
  Vector adjoint_apply(const Vector& y) const;
  LinearOperator adjoint() const { return LinearOperator(entries_.transpose()); }

 private:
  Matrix entries_;
};

inline Vector apply(const LinearOperator& op, const Vector& x) { return op.apply(x); }
inline Vector adjoint_apply(const LinearOperator& op, const Vector& y) {
  return op.adjoint_apply(y);
}

/// A linear subspace of R^n described by an orthonormal basis. An empty
/// basis denotes {0}.
class Subspace {
 public:
  Subspace(Index ambient_dim, Matrix basis, double orthonormality_tol = 1e-12);

  static Subspace zero(Index ambient_dim);
  static Subspace full(Index ambient_dim);
  static Subspace coordinates(Index ambient_dim, const std::vector<Index>& indices);
  /// Orthonormal basis of the column span of `vectors` (numerical rank cut at
  /// kRankCutoff relative).
  static Subspace span_of(const Matrix& vectors);

  Index ambient_dim() const { return ambient_dim_; }
  Index dim() const { return basis_.cols(); }
  bool is_zero() const { return basis_.cols() == 0; }
  const Matrix& basis() const { return basis_; }

  Vector project(const Vector& v) const;
  Matrix projector_matrix() const;
  Subspace orthogonal_complement() const;
  /// ||P_perp v||_2 <= tol * max(1, ||v||_2).
  bool contains(const Vector& v, double tol = 1e-9) const;

 private:
  Index ambient_dim_;
  Matrix basis_;
};

LinearOperator projector(const Subspace& sub);

/// op * P_sub, i.e. the restriction L_V = L P_V. Its adjoint is P_sub * op^*.
LinearOperator restricted_operator(const LinearOperator& op, const Subspace& sub);

/// Moore-Penrose pseudoinverse through an SVD with relative cutoff
/// kRankCutoff.
LinearOperator pseudoinverse(const LinearOperator& op);
Vector pseudoinverse_apply(const LinearOperator& op, const Vector& y);

/// Null space: right singular vectors with sigma <= tol * sigma_max. The zero
/// operator has the full domain as kernel.
Subspace kernel_basis(const LinearOperator& op, double tol = kRankCutoff);
/// Column space, with the same cutoff convention as kernel_basis.
Subspace range_basis(const LinearOperator& op, double tol = kRankCutoff);

/// min_{x in sub, |x| = 1} ||phi x||_2. Zero means phi is not injective on
/// sub; +inf is returned for sub = {0}.
double restricted_injectivity_constant(const LinearOperator& phi, const Subspace& sub);

/// Smallest singular value above tol * sigma_max. Throws std::domain_error on
/// the zero operator.
double smallest_nonzero_singular_value(const LinearOperator& op, double tol = kRankCutoff);

/// Largest singular value.
double operator_norm(const LinearOperator& op);

/// Largest singular value by power iteration on op^T op, stopped at the given
/// relative change.
double operator_norm_power(const LinearOperator& op, double rel_tol = 1e-10,
                           int max_iter = 20000);

/// Vertical stack [top; bottom].
LinearOperator stack(const LinearOperator& top, const LinearOperator& bottom);

// CSV matrix format: first line "rows,cols", then one matrix row per line.
void write_operator_csv(std::ostream& out, const LinearOperator& op);
LinearOperator read_operator_csv(std::istream& in);
void save_operator_csv(const std::filesystem::path& path, const LinearOperator& op);
LinearOperator load_operator_csv(const std::filesystem::path& path);

}  // namespace adp
