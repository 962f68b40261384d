#include "adp/linops.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace adp {

namespace {

Eigen::JacobiSVD<Matrix> thin_svd(const Matrix& m) {
  return Eigen::JacobiSVD<Matrix>(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
}

Index numerical_rank(const Vector& sv, double tol) {
  if (sv.size() == 0 || sv(0) <= 0.0) return 0;
  const double cut = tol * sv(0);
  Index r = 0;
  while (r < sv.size() && sv(r) > cut) ++r;
  return r;
}

std::vector<double> parse_csv_line(const std::string& line) {
  std::vector<double> values;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(cell, &pos);
    } catch (const std::exception&) {
      throw std::invalid_argument("operator csv: not a number: '" + cell + "'");
    }
    values.push_back(v);
  }
  return values;
}

}  // namespace

void require_dims(bool ok, const std::string& what) {
  if (!ok) throw DimensionError(what);
}

LinearOperator::LinearOperator(Matrix entries) : entries_(std::move(entries)) {
  require_dims(entries_.rows() > 0 && entries_.cols() > 0,
               "LinearOperator: rows and cols must be positive");
}

LinearOperator LinearOperator::identity(Index n) {
  return LinearOperator(Matrix::Identity(n, n));
}

LinearOperator LinearOperator::zero(Index rows, Index cols) {
  return LinearOperator(Matrix::Zero(rows, cols));
}

LinearOperator LinearOperator::diagonal(const Vector& d) {
  return LinearOperator(Matrix(d.asDiagonal()));
}

Vector LinearOperator::apply(const Vector& x) const {
  require_dims(x.size() == cols(), "apply: expected vector of length " +
                                       std::to_string(cols()) + ", got " +
                                       std::to_string(x.size()));
  return entries_ * x;
}

Vector LinearOperator::adjoint_apply(const Vector& y) const {
  require_dims(y.size() == rows(), "adjoint_apply: expected vector of length " +
                                       std::to_string(rows()) + ", got " +
                                       std::to_string(y.size()));
  return entries_.transpose() * y;
}

Subspace::Subspace(Index ambient_dim, Matrix basis, double orthonormality_tol)
    : ambient_dim_(ambient_dim), basis_(std::move(basis)) {
  require_dims(ambient_dim_ > 0, "Subspace: ambient dimension must be positive");
  if (basis_.cols() == 0) {
    basis_.resize(ambient_dim_, 0);
    return;
  }
  require_dims(basis_.rows() == ambient_dim_, "Subspace: basis rows != ambient dimension");
  const Matrix gram = basis_.transpose() * basis_;
  const double err = (gram - Matrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
  if (err > orthonormality_tol) {
    throw std::invalid_argument("Subspace: basis is not orthonormal (deviation " +
                                std::to_string(err) + ")");
  }
}

Subspace Subspace::zero(Index ambient_dim) { return Subspace(ambient_dim, Matrix(ambient_dim, 0)); }

Subspace Subspace::full(Index ambient_dim) {
  return Subspace(ambient_dim, Matrix::Identity(ambient_dim, ambient_dim));
}

Subspace Subspace::coordinates(Index ambient_dim, const std::vector<Index>& indices) {
  Matrix b = Matrix::Zero(ambient_dim, static_cast<Index>(indices.size()));
  for (std::size_t k = 0; k < indices.size(); ++k) {
    require_dims(indices[k] >= 0 && indices[k] < ambient_dim,
                 "Subspace::coordinates: index out of range");
    b(indices[k], static_cast<Index>(k)) = 1.0;
  }
  return Subspace(ambient_dim, std::move(b));
}

Subspace Subspace::span_of(const Matrix& vectors) {
  const Index n = vectors.rows();
  if (vectors.cols() == 0 || vectors.isZero(0.0)) return zero(n);
  const auto svd = thin_svd(vectors);
  const Index r = numerical_rank(svd.singularValues(), kRankCutoff);
  return Subspace(n, svd.matrixU().leftCols(r), 1e-10);
}

Vector Subspace::project(const Vector& v) const {
  require_dims(v.size() == ambient_dim_, "Subspace::project: dimension mismatch");
  if (basis_.cols() == 0) return Vector::Zero(ambient_dim_);
  return basis_ * (basis_.transpose() * v);
}

Matrix Subspace::projector_matrix() const {
  if (basis_.cols() == 0) return Matrix::Zero(ambient_dim_, ambient_dim_);
  return basis_ * basis_.transpose();
}

Subspace Subspace::orthogonal_complement() const {
  const Index k = basis_.cols();
  if (k == 0) return full(ambient_dim_);
  if (k == ambient_dim_) return zero(ambient_dim_);
  Eigen::HouseholderQR<Matrix> qr(basis_);
  const Matrix q = qr.householderQ() * Matrix::Identity(ambient_dim_, ambient_dim_);
  return Subspace(ambient_dim_, q.rightCols(ambient_dim_ - k), 1e-10);
}

bool Subspace::contains(const Vector& v, double tol) const {
  const Vector resid = v - project(v);
  return resid.norm() <= tol * std::max(1.0, v.norm());
}

LinearOperator projector(const Subspace& sub) {
  return LinearOperator(sub.projector_matrix());
}

LinearOperator restricted_operator(const LinearOperator& op, const Subspace& sub) {
  require_dims(sub.ambient_dim() == op.cols(),
               "restricted_operator: subspace lives in R^" + std::to_string(sub.ambient_dim()) +
                   " but operator domain is R^" + std::to_string(op.cols()));
  return LinearOperator(op.matrix() * sub.projector_matrix());
}

LinearOperator pseudoinverse(const LinearOperator& op) {
  const auto svd = thin_svd(op.matrix());
  const Vector& s = svd.singularValues();
  const Index r = numerical_rank(s, kRankCutoff);
  Matrix pinv = Matrix::Zero(op.cols(), op.rows());
  if (r > 0) {
    pinv = svd.matrixV().leftCols(r) * s.head(r).cwiseInverse().asDiagonal() *
           svd.matrixU().leftCols(r).transpose();
  }
  return LinearOperator(std::move(pinv));
}

Vector pseudoinverse_apply(const LinearOperator& op, const Vector& y) {
  require_dims(y.size() == op.rows(), "pseudoinverse_apply: dimension mismatch");
  return pseudoinverse(op).matrix() * y;
}

Subspace kernel_basis(const LinearOperator& op, double tol) {
  const Index n = op.cols();
  if (op.matrix().isZero(0.0)) return Subspace::full(n);
  Eigen::JacobiSVD<Matrix> svd(op.matrix(), Eigen::ComputeFullV);
  const Index r = numerical_rank(svd.singularValues(), tol);
  if (r == n) return Subspace::zero(n);
  return Subspace(n, svd.matrixV().rightCols(n - r), 1e-10);
}

Subspace range_basis(const LinearOperator& op, double tol) {
  const Index m = op.rows();
  if (op.matrix().isZero(0.0)) return Subspace::zero(m);
  const auto svd = thin_svd(op.matrix());
  const Index r = numerical_rank(svd.singularValues(), tol);
  return Subspace(m, svd.matrixU().leftCols(r), 1e-10);
}

double restricted_injectivity_constant(const LinearOperator& phi, const Subspace& sub) {
  require_dims(sub.ambient_dim() == phi.cols(),
               "restricted_injectivity_constant: subspace/operator dimension mismatch");
  if (sub.is_zero()) return kVacuousInjectivity;
  const Matrix restricted = phi.matrix() * sub.basis();
  const Vector s = Eigen::JacobiSVD<Matrix>(restricted).singularValues();
  // A tall-thin restriction has sub.dim() singular values; a wide one has a
  // nontrivial kernel and therefore constant zero.
  if (restricted.rows() < restricted.cols()) return 0.0;
  const double smin = s(s.size() - 1);
  const double scale = std::max(operator_norm(phi), std::numeric_limits<double>::min());
  return smin <= kRankCutoff * scale ? 0.0 : smin;
}

double smallest_nonzero_singular_value(const LinearOperator& op, double tol) {
  const Vector s = Eigen::JacobiSVD<Matrix>(op.matrix()).singularValues();
  const Index r = numerical_rank(s, tol);
  if (r == 0) throw std::domain_error("smallest_nonzero_singular_value: zero operator");
  return s(r - 1);
}

double operator_norm(const LinearOperator& op) {
  const Vector s = Eigen::JacobiSVD<Matrix>(op.matrix()).singularValues();
  return s.size() == 0 ? 0.0 : s(0);
}

double operator_norm_power(const LinearOperator& op, double rel_tol, int max_iter) {
  const Matrix& a = op.matrix();
  if (a.isZero(0.0)) return 0.0;
  // Deterministic, generically non-orthogonal start.
  Vector v(a.cols());
  for (Index i = 0; i < v.size(); ++i) v(i) = 1.0 + 0.01 * static_cast<double>(i % 7);
  v.normalize();
  double estimate = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Vector w = a.transpose() * (a * v);
    const double next = std::sqrt(w.norm());
    if (next == 0.0) return operator_norm(op);
    v = w / w.norm();
    if (std::abs(next - estimate) <= rel_tol * next) return next;
    estimate = next;
  }
  // Clustered top singular values: fall back to the exact value.
  return operator_norm(op);
}

LinearOperator stack(const LinearOperator& top, const LinearOperator& bottom) {
  require_dims(top.cols() == bottom.cols(), "stack: column counts differ");
  Matrix m(top.rows() + bottom.rows(), top.cols());
  m << top.matrix(), bottom.matrix();
  return LinearOperator(std::move(m));
}

void write_operator_csv(std::ostream& out, const LinearOperator& op) {
  out << op.rows() << ',' << op.cols() << '\n';
  out << std::setprecision(17);
  for (Index i = 0; i < op.rows(); ++i) {
    for (Index j = 0; j < op.cols(); ++j) {
      if (j) out << ',';
      out << op.matrix()(i, j);
    }
    out << '\n';
  }
}

LinearOperator read_operator_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("operator csv: missing header");
  const auto header = parse_csv_line(line);
  if (header.size() != 2 || header[0] < 1 || header[1] < 1 ||
      header[0] != std::floor(header[0]) || header[1] != std::floor(header[1])) {
    throw std::invalid_argument("operator csv: header must be 'rows,cols'");
  }
  const auto rows = static_cast<Index>(header[0]);
  const auto cols = static_cast<Index>(header[1]);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    if (!std::getline(in, line)) {
      throw std::invalid_argument("operator csv: expected " + std::to_string(rows) + " rows");
    }
    const auto values = parse_csv_line(line);
    if (static_cast<Index>(values.size()) != cols) {
      throw std::invalid_argument("operator csv: row " + std::to_string(i + 1) + " has " +
                                  std::to_string(values.size()) + " entries, expected " +
                                  std::to_string(cols));
    }
    for (Index j = 0; j < cols; ++j) m(i, j) = values[static_cast<std::size_t>(j)];
  }
  return LinearOperator(std::move(m));
}

void save_operator_csv(const std::filesystem::path& path, const LinearOperator& op) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_operator_csv(out, op);
}

LinearOperator load_operator_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open operator file " + path.string());
  return read_operator_csv(in);
}

}  // namespace adp
