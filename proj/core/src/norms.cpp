#include "adp/norms.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace adp {

namespace {

using MatrixMap = Eigen::Map<const Matrix>;

MatrixMap as_matrix(const DecomposableNorm& norm, const Vector& u) {
  return MatrixMap(u.data(), norm.nrows(), norm.ncols());
}

Vector as_vector(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

void check_dim(const DecomposableNorm& norm, const Vector& u, const char* where) {
  require_dims(u.size() == norm.ambient_dim(),
               std::string(where) + ": expected vector of length " +
                   std::to_string(norm.ambient_dim()) + ", got " + std::to_string(u.size()));
}

Vector block_norms(const DecomposableNorm& norm, const Vector& u) {
  const auto& blocks = norm.blocks();
  Vector out(static_cast<Index>(blocks.size()));
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    double s = 0.0;
    for (Index i : blocks[b]) s += u(i) * u(i);
    out(static_cast<Index>(b)) = std::sqrt(s);
  }
  return out;
}

Vector singular_values(const DecomposableNorm& norm, const Vector& u) {
  return Eigen::JacobiSVD<Matrix>(as_matrix(norm, u)).singularValues();
}

// Rebuilds a matrix with modified singular values: U diag(f(s)) V^T.
template <typename F>
Vector spectral_map(const DecomposableNorm& norm, const Vector& u, F&& f) {
  Eigen::JacobiSVD<Matrix> svd(as_matrix(norm, u), Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector s = f(Vector(svd.singularValues()));
  return as_vector(svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose());
}

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

DecompositionModel coordinate_model(Index dim, const std::vector<Index>& active, Vector e) {
  std::vector<bool> on(static_cast<std::size_t>(dim), false);
  for (Index i : active) on[static_cast<std::size_t>(i)] = true;
  std::vector<Index> inactive;
  for (Index i = 0; i < dim; ++i)
    if (!on[static_cast<std::size_t>(i)]) inactive.push_back(i);
  return DecompositionModel{Subspace::coordinates(dim, active),
                            Subspace::coordinates(dim, inactive), std::move(e), std::nullopt};
}

// Flips singular pairs so the first entry of each left singular vector that is
// not negligible is positive.
void fix_signs(Matrix& u, Matrix& v) {
  const Index k = std::min(u.cols(), v.cols());
  for (Index i = 0; i < u.cols(); ++i) {
    const double scale = u.col(i).cwiseAbs().maxCoeff();
    for (Index r = 0; r < u.rows(); ++r) {
      if (std::abs(u(r, i)) > 1e-12 * scale) {
        if (u(r, i) < 0.0) {
          u.col(i) *= -1.0;
          if (i < k) v.col(i) *= -1.0;
        }
        break;
      }
    }
  }
}

DecompositionModel nuclear_model(const DecomposableNorm& norm, const Vector& x, double tol) {
  const Index m = norm.nrows();
  const Index n = norm.ncols();
  Eigen::JacobiSVD<Matrix> svd(as_matrix(norm, x), Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector& s = svd.singularValues();
  Index r = 0;
  while (r < s.size() && s(r) > tol * s(0) && s(0) > 0.0) ++r;
  Matrix u = svd.matrixU();
  Matrix v = svd.matrixV();
  fix_signs(u, v);

  // T is spanned by vec(u_i v_j^T) with i < r or j < r; S by the rest.
  Matrix t_basis(m * n, r * (m + n - r));
  Matrix s_basis(m * n, (m - r) * (n - r));
  Index kt = 0;
  Index ks = 0;
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < m; ++i) {
      const Vector atom = as_vector(u.col(i) * v.col(j).transpose());
      if (i < r || j < r) {
        t_basis.col(kt++) = atom;
      } else {
        s_basis.col(ks++) = atom;
      }
    }
  }
  Vector e = Vector::Zero(m * n);
  for (Index i = 0; i < r; ++i) e += as_vector(u.col(i) * v.col(i).transpose());
  return DecompositionModel{Subspace(m * n, std::move(t_basis), 1e-10),
                            Subspace(m * n, std::move(s_basis), 1e-10), std::move(e),
                            std::nullopt};
}

bool is_diagonal_01(const Matrix& p, double tol) {
  for (Index j = 0; j < p.cols(); ++j)
    for (Index i = 0; i < p.rows(); ++i) {
      const double target = i == j ? std::round(p(i, j)) : 0.0;
      if (std::abs(p(i, j) - target) > tol) return false;
    }
  return true;
}

}  // namespace

std::string to_string(NormKind kind) {
  switch (kind) {
    case NormKind::l1:
      return "l1";
    case NormKind::group:
      return "group";
    case NormKind::nuclear:
      return "nuclear";
  }
  return "unknown";
}

DecomposableNorm DecomposableNorm::l1(Index dim) {
  require_dims(dim > 0, "l1 norm: dimension must be positive");
  return DecomposableNorm(NormKind::l1, dim);
}

DecomposableNorm DecomposableNorm::group(std::vector<std::vector<Index>> blocks) {
  Index dim = 0;
  for (const auto& b : blocks) dim += static_cast<Index>(b.size());
  require_dims(dim > 0, "group norm: no coordinates");
  std::vector<int> seen(static_cast<std::size_t>(dim), 0);
  for (const auto& b : blocks) {
    if (b.empty()) throw std::invalid_argument("group norm: empty block");
    for (Index i : b) {
      if (i < 0 || i >= dim) {
        throw std::invalid_argument("group norm: index " + std::to_string(i) +
                                    " outside 0.." + std::to_string(dim - 1) +
                                    " (blocks must cover the space)");
      }
      if (seen[static_cast<std::size_t>(i)]++) {
        throw std::invalid_argument("group norm: index " + std::to_string(i) +
                                    " appears in more than one block");
      }
    }
  }
  DecomposableNorm norm(NormKind::group, dim);
  norm.blocks_ = std::move(blocks);
  return norm;
}

DecomposableNorm DecomposableNorm::nuclear(Index nrows, Index ncols) {
  require_dims(nrows > 0 && ncols > 0, "nuclear norm: matrix shape must be positive");
  DecomposableNorm norm(NormKind::nuclear, nrows * ncols);
  norm.nrows_ = nrows;
  norm.ncols_ = ncols;
  return norm;
}

double norm_value(const DecomposableNorm& norm, const Vector& u) {
  check_dim(norm, u, "norm_value");
  switch (norm.kind()) {
    case NormKind::l1:
      return u.lpNorm<1>();
    case NormKind::group:
      return block_norms(norm, u).sum();
    case NormKind::nuclear:
      return singular_values(norm, u).sum();
  }
  return 0.0;
}

double dual_norm_value(const DecomposableNorm& norm, const Vector& u) {
  check_dim(norm, u, "dual_norm_value");
  switch (norm.kind()) {
    case NormKind::l1:
      return u.size() ? u.lpNorm<Eigen::Infinity>() : 0.0;
    case NormKind::group:
      return block_norms(norm, u).maxCoeff();
    case NormKind::nuclear:
      return singular_values(norm, u)(0);
  }
  return 0.0;
}

Vector prox(const DecomposableNorm& norm, const Vector& u, double tau) {
  check_dim(norm, u, "prox");
  if (!(tau > 0.0)) throw std::invalid_argument("prox: tau must be positive");
  switch (norm.kind()) {
    case NormKind::l1:
      return u.unaryExpr([tau](double v) { return sign(v) * std::max(std::abs(v) - tau, 0.0); });
    case NormKind::group: {
      Vector z = u;
      const Vector bn = block_norms(norm, u);
      for (std::size_t b = 0; b < norm.blocks().size(); ++b) {
        const double nb = bn(static_cast<Index>(b));
        const double scale = nb > tau ? 1.0 - tau / nb : 0.0;
        for (Index i : norm.blocks()[b]) z(i) *= scale;
      }
      return z;
    }
    case NormKind::nuclear:
      return spectral_map(norm, u, [tau](Vector s) {
        return Vector(s.unaryExpr([tau](double v) { return std::max(v - tau, 0.0); }));
      });
  }
  return u;
}

Vector project_dual_ball(const DecomposableNorm& norm, const Vector& u, double radius) {
  check_dim(norm, u, "project_dual_ball");
  switch (norm.kind()) {
    case NormKind::l1:
      return u.cwiseMax(-radius).cwiseMin(radius);
    case NormKind::group: {
      Vector z = u;
      const Vector bn = block_norms(norm, u);
      for (std::size_t b = 0; b < norm.blocks().size(); ++b) {
        const double nb = bn(static_cast<Index>(b));
        if (nb > radius)
          for (Index i : norm.blocks()[b]) z(i) *= radius / nb;
      }
      return z;
    }
    case NormKind::nuclear:
      return spectral_map(norm, u, [radius](Vector s) { return Vector(s.cwiseMin(radius)); });
  }
  return u;
}

Vector project_l1_ball(const Vector& v, double radius) {
  if (v.lpNorm<1>() <= radius) return v;
  // Sort-based projection onto the simplex of the magnitudes.
  std::vector<double> a(static_cast<std::size_t>(v.size()));
  for (Index i = 0; i < v.size(); ++i) a[static_cast<std::size_t>(i)] = std::abs(v(i));
  std::sort(a.begin(), a.end(), std::greater<>());
  double cumsum = 0.0;
  double theta = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    cumsum += a[k];
    const double t = (cumsum - radius) / static_cast<double>(k + 1);
    if (a[k] - t > 0.0) theta = t;
  }
  return v.unaryExpr([theta](double x) { return sign(x) * std::max(std::abs(x) - theta, 0.0); });
}

Vector project_norm_ball(const DecomposableNorm& norm, const Vector& u, double radius) {
  check_dim(norm, u, "project_norm_ball");
  switch (norm.kind()) {
    case NormKind::l1:
      return project_l1_ball(u, radius);
    case NormKind::group: {
      const Vector bn = block_norms(norm, u);
      const Vector target = project_l1_ball(bn, radius);
      Vector z = u;
      for (std::size_t b = 0; b < norm.blocks().size(); ++b) {
        const auto bi = static_cast<Index>(b);
        const double scale = bn(bi) > 0.0 ? target(bi) / bn(bi) : 0.0;
        for (Index i : norm.blocks()[b]) z(i) *= scale;
      }
      return z;
    }
    case NormKind::nuclear:
      return spectral_map(norm, u, [radius](Vector s) { return project_l1_ball(s, radius); });
  }
  return u;
}

DecompositionModel decompose_at(const DecomposableNorm& norm, const Vector& u, double tol) {
  check_dim(norm, u, "decompose_at");
  const Index p = norm.ambient_dim();
  switch (norm.kind()) {
    case NormKind::l1: {
      const double umax = u.cwiseAbs().maxCoeff();
      std::vector<Index> active;
      Vector e = Vector::Zero(p);
      if (umax > 0.0) {
        for (Index i = 0; i < p; ++i) {
          if (std::abs(u(i)) > tol * umax) {
            active.push_back(i);
            e(i) = sign(u(i));
          }
        }
      }
      return coordinate_model(p, active, std::move(e));
    }
    case NormKind::group: {
      const Vector bn = block_norms(norm, u);
      const double bmax = bn.maxCoeff();
      std::vector<Index> active;
      Vector e = Vector::Zero(p);
      if (bmax > 0.0) {
        for (std::size_t b = 0; b < norm.blocks().size(); ++b) {
          const double nb = bn(static_cast<Index>(b));
          if (nb > tol * bmax) {
            for (Index i : norm.blocks()[b]) {
              active.push_back(i);
              e(i) = u(i) / nb;
            }
          }
        }
      }
      std::sort(active.begin(), active.end());
      return coordinate_model(p, active, std::move(e));
    }
    case NormKind::nuclear:
      return nuclear_model(norm, u, tol);
  }
  throw std::logic_error("decompose_at: unknown norm kind");
}

DecompositionModel with_separable_partition(const DecomposableNorm& norm,
                                            DecompositionModel model,
                                            const std::vector<Index>& v_members) {
  if (!norm.separable()) {
    throw std::invalid_argument("separable partition: " + to_string(norm.kind()) +
                                " norm is not separable");
  }
  const Index p = norm.ambient_dim();
  std::vector<Index> v_coords;
  if (norm.kind() == NormKind::l1) {
    v_coords = v_members;
  } else {
    for (Index b : v_members) {
      if (b < 0 || b >= static_cast<Index>(norm.blocks().size()))
        throw std::invalid_argument("separable partition: block id out of range");
      const auto& blk = norm.blocks()[static_cast<std::size_t>(b)];
      v_coords.insert(v_coords.end(), blk.begin(), blk.end());
    }
  }
  std::sort(v_coords.begin(), v_coords.end());
  const Matrix ps = model.complement.projector_matrix();
  std::vector<bool> in_v(static_cast<std::size_t>(p), false);
  for (Index i : v_coords) {
    if (i < 0 || i >= p) throw std::invalid_argument("separable partition: index out of range");
    if (ps(i, i) < 0.5)
      throw std::invalid_argument("separable partition: coordinate " + std::to_string(i) +
                                  " is active in the model");
    in_v[static_cast<std::size_t>(i)] = true;
  }
  std::vector<Index> w_coords;
  for (Index i = 0; i < p; ++i)
    if (ps(i, i) > 0.5 && !in_v[static_cast<std::size_t>(i)]) w_coords.push_back(i);
  model.separable_partition =
      SeparablePartition{Subspace::coordinates(p, v_coords), Subspace::coordinates(p, w_coords)};
  return model;
}

bool is_separable_split(const DecomposableNorm& norm, const Subspace& s, const Subspace& v,
                        const Subspace& w, double tol) {
  if (!norm.separable()) return false;
  if (v.ambient_dim() != s.ambient_dim() || w.ambient_dim() != s.ambient_dim()) return false;
  const Matrix pv = v.projector_matrix();
  const Matrix pw = w.projector_matrix();
  if (!is_diagonal_01(pv, tol) || !is_diagonal_01(pw, tol)) return false;
  if ((pv * pw).cwiseAbs().maxCoeff() > tol) return false;
  if ((pv + pw - s.projector_matrix()).cwiseAbs().maxCoeff() > tol) return false;
  if (norm.kind() == NormKind::group) {
    for (const auto& blk : norm.blocks()) {
      const double first_v = pv(blk.front(), blk.front());
      const double first_w = pw(blk.front(), blk.front());
      for (Index i : blk)
        if (std::abs(pv(i, i) - first_v) > tol || std::abs(pw(i, i) - first_w) > tol) return false;
    }
  }
  return true;
}

Membership subdiff_membership(const DecomposableNorm& norm, const DecompositionModel& model,
                              const Vector& alpha, double tol) {
  check_dim(norm, alpha, "subdiff_membership");
  const double t_dev = (model.model_space.project(alpha) - model.e).norm();
  if (t_dev > tol) {
    return {false, "alpha_T differs from e by " + std::to_string(t_dev)};
  }
  const double dual = dual_norm_value(norm, model.complement.project(alpha));
  if (dual > 1.0 + tol) {
    return {false, "dual norm of alpha_S is " + std::to_string(dual) + " > 1"};
  }
  return {true, {}};
}

Membership subdiff_membership(const DecomposableNorm& norm, const Vector& u, const Vector& alpha,
                              double tol) {
  check_dim(norm, u, "subdiff_membership");
  return subdiff_membership(norm, decompose_at(norm, u), alpha, tol);
}

double coercivity_constant(const DecomposableNorm& norm) {
  // ||u||_1 >= ||u||_2, sum of block norms >= ||u||_2, ||X||_* >= ||X||_F.
  switch (norm.kind()) {
    case NormKind::l1:
    case NormKind::group:
    case NormKind::nuclear:
      return 1.0;
  }
  return 1.0;
}

double bregman(const DecomposableNorm& norm, const Vector& u, const Vector& u0,
               const Vector& alpha, double tol) {
  check_dim(norm, u, "bregman");
  const Membership m = subdiff_membership(norm, u0, alpha, tol);
  if (!m) throw std::invalid_argument("bregman: alpha is not a subgradient at u0 (" + m.reason + ")");
  return norm_value(norm, u) - norm_value(norm, u0) - alpha.dot(u - u0);
}

}  // namespace adp
