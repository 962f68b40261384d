#pragma once

// Decomposable norms on R^P (l1, group l1-l2, nuclear) together with the
// machinery that the recovery analysis needs from them: dual norms, proximal
// maps, ball projections, the model pair (T, e) describing the
// subdifferential, membership tests and Bregman distances.

#include "adp/linops.hpp"

#include <optional>
#include <string>
#include <vector>

namespace adp {

enum class NormKind { l1, group, nuclear };

std::string to_string(NormKind kind);

/// Relative threshold for support / active-block / rank detection.
inline constexpr double kActiveTol = 1e-8;

class DecomposableNorm {
 public:
  static DecomposableNorm l1(Index dim);
  /// Blocks are 0-based, disjoint and must cover 0..P-1.
  static DecomposableNorm group(std::vector<std::vector<Index>> blocks);
  /// Matrices are vectorized column-major: u[i + j * nrows] = X(i, j).
  static DecomposableNorm nuclear(Index nrows, Index ncols);

  NormKind kind() const { return kind_; }
  Index ambient_dim() const { return dim_; }
  const std::vector<std::vector<Index>>& blocks() const { return blocks_; }
  Index nrows() const { return nrows_; }
  Index ncols() const { return ncols_; }
  /// l1 and group norms split additively over coordinate / block partitions
  /// of an inactive set; the nuclear norm offers no such partition.
  bool separable() const { return kind_ != NormKind::nuclear; }

 private:
  DecomposableNorm(NormKind kind, Index dim) : kind_(kind), dim_(dim) {}

  NormKind kind_;
  Index dim_;
  std::vector<std::vector<Index>> blocks_;
  Index nrows_ = 0;
  Index ncols_ = 0;
};

struct SeparablePartition {
  Subspace v;
  Subspace w;
};

/// The pair (T, e) describing the subdifferential of a decomposable norm at a
/// point u:  alpha in d||.||(u)  <=>  P_T alpha = e  and  ||P_S alpha||_* <= 1,
/// with S the orthogonal complement of T.
struct DecompositionModel {
  Subspace model_space;  // T
  Subspace complement;   // S = T^perp
  Vector e;
  std::optional<SeparablePartition> separable_partition;

  const Subspace& t() const { return model_space; }
  const Subspace& s() const { return complement; }
};

double norm_value(const DecomposableNorm& norm, const Vector& u);
double dual_norm_value(const DecomposableNorm& norm, const Vector& u);

/// argmin_z 1/2 ||z - u||^2 + tau ||z||.  Throws std::invalid_argument when
/// tau <= 0.
Vector prox(const DecomposableNorm& norm, const Vector& u, double tau);

/// Euclidean projection onto {v : ||v||_* <= radius}.
Vector project_dual_ball(const DecomposableNorm& norm, const Vector& u, double radius = 1.0);
/// Euclidean projection onto {v : ||v|| <= radius}.
Vector project_norm_ball(const DecomposableNorm& norm, const Vector& u, double radius = 1.0);

DecompositionModel decompose_at(const DecomposableNorm& norm, const Vector& u,
                                double tol = kActiveTol);

/// Splits S into V (spanned by the given inactive coordinates for l1, or the
/// given inactive blocks for group norms) and W = S minus V. Throws for the
/// nuclear norm and for indices that are active in the model.
DecompositionModel with_separable_partition(const DecomposableNorm& norm,
                                            DecompositionModel model,
                                            const std::vector<Index>& v_members);

/// True when V and W are orthogonal, coordinate (block) aligned for this norm
/// and together span `s`.
bool is_separable_split(const DecomposableNorm& norm, const Subspace& s, const Subspace& v,
                        const Subspace& w, double tol = 1e-9);

struct Membership {
  bool member = false;
  std::string reason;  // empty for members
  explicit operator bool() const { return member; }
};

Membership subdiff_membership(const DecomposableNorm& norm, const Vector& u, const Vector& alpha,
                              double tol = 1e-8);
/// Membership test against an already computed model.
Membership subdiff_membership(const DecomposableNorm& norm, const DecompositionModel& model,
                              const Vector& alpha, double tol = 1e-8);

/// Largest C with ||u|| >= C ||u||_2 for all u.
double coercivity_constant(const DecomposableNorm& norm);

/// ||u|| - ||u0|| - <alpha, u - u0>. Throws std::invalid_argument when alpha is
/// not a subgradient at u0 (to tolerance `tol`).
double bregman(const DecomposableNorm& norm, const Vector& u, const Vector& u0,
               const Vector& alpha, double tol = 1e-8);

/// Euclidean projection onto the l1 ball of the given radius.
Vector project_l1_ball(const Vector& v, double radius);

}  // namespace adp
