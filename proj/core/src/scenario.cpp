#include "adp/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"

namespace adp {

namespace {

using json = nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!known.count(it.key())) throw ConfigError(where + ": unknown key '" + it.key() + "'");
  }
}

const json& require_object(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_object())
    throw ConfigError(std::string("missing object '") + key + "'");
  return j.at(key);
}

Index get_dim(const json& j, const char* key) {
  const auto v = j.at(key).get<long long>();
  if (v < 0) throw ConfigError(std::string(key) + " must be nonnegative");
  return static_cast<Index>(v);
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_relative() && !base.empty() ? base / path : path;
}

PhiKind phi_kind_from(const std::string& s) {
  if (s == "gaussian") return PhiKind::gaussian;
  if (s == "identity") return PhiKind::identity;
  if (s == "convolution") return PhiKind::convolution;
  if (s == "from_file") return PhiKind::from_file;
  throw ConfigError("phi.kind: unknown value '" + s + "'");
}

AnalysisKind analysis_kind_from(const std::string& s) {
  if (s == "identity") return AnalysisKind::identity;
  if (s == "tv1d") return AnalysisKind::tv1d;
  if (s == "tv2d") return AnalysisKind::tv2d;
  if (s == "tight_frame") return AnalysisKind::tight_frame;
  if (s == "from_file") return AnalysisKind::from_file;
  throw ConfigError("analysis.kind: unknown value '" + s + "'");
}

ScenarioConfig parse_json(const json& j, const std::filesystem::path& base) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(j,
                 {"seed", "dims", "phi", "analysis", "norm", "signal", "epsilons", "trials", "c",
                  "certificate_mode", "frame_mode", "solver"},
                 "config");
  ScenarioConfig cfg;
  cfg.seed = j.value("seed", std::uint64_t{0});

  const json& dims = require_object(j, "dims");
  reject_unknown(dims, {"m", "n", "p"}, "dims");
  cfg.m = get_dim(dims, "m");
  cfg.n = get_dim(dims, "n");
  if (dims.contains("p")) cfg.p = get_dim(dims, "p");

  const json& phi = require_object(j, "phi");
  reject_unknown(phi, {"kind", "kernel", "path"}, "phi");
  cfg.phi_kind = phi_kind_from(phi.at("kind").get<std::string>());
  if (phi.contains("kernel")) cfg.conv_kernel = phi.at("kernel").get<std::vector<double>>();
  if (phi.contains("path")) cfg.phi_file = resolve(base, phi.at("path").get<std::string>());

  const json& an = require_object(j, "analysis");
  reject_unknown(an, {"kind", "height", "width", "path"}, "analysis");
  cfg.analysis_kind = analysis_kind_from(an.at("kind").get<std::string>());
  if (an.contains("height")) cfg.tv_height = get_dim(an, "height");
  if (an.contains("width")) cfg.tv_width = get_dim(an, "width");
  if (an.contains("path")) cfg.analysis_file = resolve(base, an.at("path").get<std::string>());

  const json& norm = require_object(j, "norm");
  reject_unknown(norm, {"kind", "blocks", "isotropic", "nrows", "ncols"}, "norm");
  const auto nk = norm.at("kind").get<std::string>();
  if (nk == "l1") {
    cfg.norm_kind = NormKind::l1;
  } else if (nk == "group") {
    cfg.norm_kind = NormKind::group;
    cfg.isotropic = norm.value("isotropic", false);
    if (norm.contains("blocks")) {
      for (const auto& blk : norm.at("blocks")) {
        std::vector<Index> b;
        for (const auto& v : blk) {
          const auto i = v.get<long long>();
          if (i < 1) throw ConfigError("norm.blocks: indices are 1-based");
          b.push_back(static_cast<Index>(i - 1));
        }
        cfg.blocks.push_back(std::move(b));
      }
    }
  } else if (nk == "nuclear") {
    cfg.norm_kind = NormKind::nuclear;
    cfg.nuclear_rows = get_dim(norm, "nrows");
    cfg.nuclear_cols = get_dim(norm, "ncols");
  } else {
    throw ConfigError("norm.kind: unknown value '" + nk + "'");
  }

  const json& sig = require_object(j, "signal");
  reject_unknown(sig, {"active", "x0"}, "signal");
  if (sig.contains("active")) cfg.active = get_dim(sig, "active");
  if (sig.contains("x0")) {
    const auto v = sig.at("x0").get<std::vector<double>>();
    cfg.x0 = Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
  }

  if (j.contains("epsilons")) cfg.epsilons = j.at("epsilons").get<std::vector<double>>();
  cfg.trials = j.value("trials", 1);
  cfg.c = j.value("c", 1.0);
  cfg.certificate_mode =
      certificate_mode_from_string(j.value("certificate_mode", std::string("full")));
  if (j.contains("frame_mode")) {
    const json& fm = j.at("frame_mode");
    if (fm.is_boolean()) {
      if (fm.get<bool>()) cfg.frame_lower_bound = 1.0;
    } else if (fm.is_number()) {
      cfg.frame_lower_bound = fm.get<double>();
    } else {
      throw ConfigError("frame_mode must be a boolean or a lower frame bound");
    }
  }
  if (j.contains("solver")) {
    const json& so = j.at("solver");
    reject_unknown(so, {"tol", "max_iter"}, "solver");
    cfg.solver.tol = so.value("tol", cfg.solver.tol);
    cfg.solver.max_iter = so.value("max_iter", cfg.solver.max_iter);
  }
  return cfg;
}

Index derived_p(const ScenarioConfig& cfg) {
  switch (cfg.analysis_kind) {
    case AnalysisKind::identity:
      return cfg.n;
    case AnalysisKind::tv1d:
      return cfg.n - 1;
    case AnalysisKind::tv2d:
      return 2 * cfg.tv_height * cfg.tv_width - cfg.tv_height - cfg.tv_width;
    case AnalysisKind::tight_frame:
    case AnalysisKind::from_file:
      return cfg.p;
  }
  return cfg.p;
}

DecomposableNorm make_norm(const ScenarioConfig& cfg, Index p) {
  switch (cfg.norm_kind) {
    case NormKind::l1:
      return DecomposableNorm::l1(p);
    case NormKind::group:
      if (cfg.isotropic) return DecomposableNorm::group(tv2d_isotropic_blocks(cfg.tv_height, cfg.tv_width));
      return DecomposableNorm::group(cfg.blocks);
    case NormKind::nuclear:
      return DecomposableNorm::nuclear(cfg.nuclear_rows, cfg.nuclear_cols);
  }
  throw ConfigError("unknown norm kind");
}

Vector gaussian_vector(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = g(rng);
  return v;
}

// Number of active units (coordinates, blocks, or rank) of u.
Index active_units(const DecomposableNorm& norm, const Vector& u) {
  const DecompositionModel m = decompose_at(norm, u);
  switch (norm.kind()) {
    case NormKind::l1:
      return m.model_space.dim();
    case NormKind::group: {
      Index count = 0;
      for (const auto& blk : norm.blocks()) {
        double eb = 0.0;
        for (Index i : blk) eb += m.e(i) * m.e(i);
        if (eb > 0.25) ++count;  // active blocks carry a unit-norm e
      }
      return count;
    }
    case NormKind::nuclear: {
      // dim T = r (n1 + n2 - r)
      const Index n1 = norm.nrows();
      const Index n2 = norm.ncols();
      const Index d = m.model_space.dim();
      for (Index r = 0; r <= std::min(n1, n2); ++r)
        if (r * (n1 + n2 - r) == d) return r;
      return -1;
    }
  }
  return -1;
}

Vector sparse_analysis_signal(const LinearOperator& analysis, const DecomposableNorm& norm,
                              Index active, std::mt19937_64& rng) {
  const Index p = analysis.rows();
  const Index n = analysis.cols();
  std::vector<std::vector<Index>> units;
  if (norm.kind() == NormKind::l1) {
    for (Index i = 0; i < p; ++i) units.push_back({i});
  } else {
    units = norm.blocks();
  }
  if (active > static_cast<Index>(units.size())) {
    throw ConfigError("signal.active = " + std::to_string(active) + " exceeds the " +
                      std::to_string(units.size()) + " available units");
  }
  std::vector<std::size_t> order(units.size());
  for (int attempt = 0; attempt < 100; ++attempt) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<Index> inactive_rows;
    for (std::size_t k = static_cast<std::size_t>(active); k < order.size(); ++k)
      for (Index i : units[order[k]]) inactive_rows.push_back(i);
    Matrix rows(static_cast<Index>(inactive_rows.size()), n);
    for (std::size_t k = 0; k < inactive_rows.size(); ++k)
      rows.row(static_cast<Index>(k)) = analysis.matrix().row(inactive_rows[k]);
    const Subspace ker = rows.rows() == 0 ? Subspace::full(n) : kernel_basis(LinearOperator(rows));
    if (ker.is_zero()) continue;
    const Vector x0 = ker.basis() * gaussian_vector(ker.dim(), rng);
    if (active_units(norm, analysis.apply(x0)) == active) return x0;
  }
  throw ConfigError("cannot realize a signal with " + std::to_string(active) +
                    " active units for this analysis operator");
}

Vector low_rank_signal(const LinearOperator& analysis, const DecomposableNorm& norm, Index rank,
                       std::mt19937_64& rng) {
  if (rank > std::min(norm.nrows(), norm.ncols()))
    throw ConfigError("signal.active: rank exceeds min(nrows, ncols)");
  const Matrix u = Eigen::Map<const Matrix>(gaussian_vector(norm.nrows() * rank, rng).data(),
                                            norm.nrows(), rank);
  const Matrix v = Eigen::Map<const Matrix>(gaussian_vector(norm.ncols() * rank, rng).data(),
                                            norm.ncols(), rank);
  const Matrix low = u * v.transpose();
  const Vector u0 = Eigen::Map<const Vector>(low.data(), low.size());
  const Vector x0 = analysis.matrix().completeOrthogonalDecomposition().solve(u0);
  if ((analysis.apply(x0) - u0).norm() > 1e-9 * std::max(1.0, u0.norm()))
    throw ConfigError("low-rank signal is not in the range of the analysis operator");
  return x0;
}

}  // namespace

std::string to_string(PhiKind kind) {
  switch (kind) {
    case PhiKind::gaussian:
      return "gaussian";
    case PhiKind::identity:
      return "identity";
    case PhiKind::convolution:
      return "convolution";
    case PhiKind::from_file:
      return "from_file";
  }
  return "unknown";
}

std::string to_string(AnalysisKind kind) {
  switch (kind) {
    case AnalysisKind::identity:
      return "identity";
    case AnalysisKind::tv1d:
      return "tv1d";
    case AnalysisKind::tv2d:
      return "tv2d";
    case AnalysisKind::tight_frame:
      return "tight_frame";
    case AnalysisKind::from_file:
      return "from_file";
  }
  return "unknown";
}

ScenarioConfig parse_scenario_config(const std::string& json_text,
                                     const std::filesystem::path& base_dir) {
  try {
    return parse_json(json::parse(json_text), base_dir);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    if (dynamic_cast<const ConfigError*>(&e)) throw;
    throw ConfigError(e.what());
  }
}

ScenarioConfig load_scenario_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario_config(ss.str(), path.parent_path());
}

void validate(const ScenarioConfig& cfg) {
  if (cfg.m <= 0 && cfg.phi_kind != PhiKind::from_file) throw ConfigError("dims.m must be positive");
  if (cfg.n <= 0) throw ConfigError("dims.n must be positive");
  switch (cfg.phi_kind) {
    case PhiKind::identity:
      if (cfg.m != cfg.n) throw ConfigError("identity phi needs m = n");
      break;
    case PhiKind::convolution:
      if (cfg.m != cfg.n) throw ConfigError("convolution phi needs m = n");
      if (cfg.conv_kernel.empty() || static_cast<Index>(cfg.conv_kernel.size()) > cfg.n)
        throw ConfigError("convolution kernel must have 1..n taps");
      break;
    case PhiKind::from_file:
      if (cfg.phi_file.empty()) throw ConfigError("phi.path is required for from_file");
      break;
    case PhiKind::gaussian:
      break;
  }
  switch (cfg.analysis_kind) {
    case AnalysisKind::tv1d:
      if (cfg.n < 2) throw ConfigError("tv1d needs n >= 2");
      break;
    case AnalysisKind::tv2d:
      if (cfg.tv_height < 1 || cfg.tv_width < 1 || cfg.tv_height * cfg.tv_width != cfg.n)
        throw ConfigError("tv2d needs height * width = n");
      if (cfg.tv_height * cfg.tv_width < 2) throw ConfigError("tv2d needs at least two pixels");
      break;
    case AnalysisKind::tight_frame:
      if (cfg.p < cfg.n) throw ConfigError("tight_frame needs p >= n");
      break;
    case AnalysisKind::from_file:
      if (cfg.analysis_file.empty()) throw ConfigError("analysis.path is required for from_file");
      break;
    case AnalysisKind::identity:
      break;
  }
  if (cfg.analysis_kind != AnalysisKind::from_file && cfg.analysis_kind != AnalysisKind::tight_frame &&
      cfg.p != 0 && cfg.p != derived_p(cfg)) {
    throw ConfigError("dims.p = " + std::to_string(cfg.p) + " but the analysis operator has " +
                      std::to_string(derived_p(cfg)) + " rows");
  }
  if (cfg.isotropic && cfg.analysis_kind != AnalysisKind::tv2d)
    throw ConfigError("norm.isotropic requires analysis.kind = tv2d");
  if (cfg.norm_kind == NormKind::group && !cfg.isotropic && cfg.blocks.empty())
    throw ConfigError("group norm needs blocks or isotropic = true");
  if (cfg.norm_kind == NormKind::nuclear && (cfg.nuclear_rows < 1 || cfg.nuclear_cols < 1))
    throw ConfigError("nuclear norm needs positive nrows and ncols");
  if (cfg.norm_kind == NormKind::nuclear && cfg.analysis_kind != AnalysisKind::from_file) {
    const Index p = derived_p(cfg);
    if (p != cfg.nuclear_rows * cfg.nuclear_cols)
      throw ConfigError("nuclear norm shape " + std::to_string(cfg.nuclear_rows) + "x" +
                        std::to_string(cfg.nuclear_cols) + " does not match p = " + std::to_string(p));
  }
  if (cfg.active.has_value() == cfg.x0.has_value())
    throw ConfigError("signal needs exactly one of 'active' and 'x0'");
  if (cfg.x0 && cfg.x0->size() != cfg.n) throw ConfigError("signal.x0 must have n entries");
  if (cfg.epsilons.empty()) throw ConfigError("epsilons must be non-empty");
  for (std::size_t k = 0; k < cfg.epsilons.size(); ++k) {
    if (!(cfg.epsilons[k] >= 0.0)) throw ConfigError("epsilons must be nonnegative");
    if (k && cfg.epsilons[k] < cfg.epsilons[k - 1]) throw ConfigError("epsilons must be ascending");
  }
  if (cfg.trials < 1) throw ConfigError("trials must be >= 1");
  if (!(cfg.c > 0.0)) throw ConfigError("c must be positive");
  if (cfg.frame_lower_bound && !(*cfg.frame_lower_bound > 0.0))
    throw ConfigError("frame_mode lower bound must be positive");
  if (!(cfg.solver.tol > 0.0) || cfg.solver.max_iter < 1)
    throw ConfigError("solver.tol must be positive and solver.max_iter >= 1");
}

LinearOperator gaussian_operator(Index m, Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0 / std::sqrt(static_cast<double>(m)));
  Matrix a(m, n);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < n; ++j) a(i, j) = g(rng);
  return LinearOperator(std::move(a));
}

LinearOperator circular_convolution(Index n, const std::vector<double>& kernel) {
  Matrix a = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (std::size_t k = 0; k < kernel.size(); ++k)
      a(i, (i - static_cast<Index>(k) % n + n) % n) += kernel[k];
  return LinearOperator(std::move(a));
}

LinearOperator tv1d_operator(Index n) {
  Matrix d = Matrix::Zero(n - 1, n);
  for (Index i = 0; i + 1 < n; ++i) {
    d(i, i) = -1.0;
    d(i, i + 1) = 1.0;
  }
  return LinearOperator(std::move(d));
}

// Pixel (i, j) sits at i + j * height. Rows: horizontal differences first,
// then vertical ones, both in pixel order.
LinearOperator tv2d_operator(Index height, Index width) {
  const Index n = height * width;
  Matrix d = Matrix::Zero(2 * n - height - width, n);
  Index row = 0;
  for (Index j = 0; j + 1 < width; ++j)
    for (Index i = 0; i < height; ++i, ++row) {
      d(row, i + j * height) = -1.0;
      d(row, i + (j + 1) * height) = 1.0;
    }
  for (Index j = 0; j < width; ++j)
    for (Index i = 0; i + 1 < height; ++i, ++row) {
      d(row, i + j * height) = -1.0;
      d(row, i + 1 + j * height) = 1.0;
    }
  return LinearOperator(std::move(d));
}

std::vector<std::vector<Index>> tv2d_isotropic_blocks(Index height, Index width) {
  const Index n_dx = height * (width - 1);
  std::vector<std::vector<Index>> blocks;
  for (Index j = 0; j < width; ++j) {
    for (Index i = 0; i < height; ++i) {
      std::vector<Index> b;
      if (j + 1 < width) b.push_back(i + j * height);
      if (i + 1 < height) b.push_back(n_dx + i + j * (height - 1));
      if (!b.empty()) blocks.push_back(std::move(b));
    }
  }
  return blocks;
}

LinearOperator parseval_frame(Index p, Index n, std::mt19937_64& rng) {
  require_dims(p >= n && n > 0, "parseval_frame: need p >= n > 0");
  Matrix g(p, p);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (Index j = 0; j < p; ++j)
    for (Index i = 0; i < p; ++i) g(i, j) = gauss(rng);
  const Matrix q = Eigen::HouseholderQR<Matrix>(g).householderQ();
  return LinearOperator(q.leftCols(n));
}

Scenario generate_scenario(const ScenarioConfig& cfg) {
  validate(cfg);
  std::mt19937_64 rng(cfg.seed);

  LinearOperator phi = LinearOperator::zero(1, 1);
  switch (cfg.phi_kind) {
    case PhiKind::gaussian:
      phi = gaussian_operator(cfg.m, cfg.n, rng);
      break;
    case PhiKind::identity:
      phi = LinearOperator::identity(cfg.n);
      break;
    case PhiKind::convolution:
      phi = circular_convolution(cfg.n, cfg.conv_kernel);
      break;
    case PhiKind::from_file:
      phi = load_operator_csv(cfg.phi_file);
      break;
  }
  if (phi.cols() != cfg.n) throw ConfigError("phi has " + std::to_string(phi.cols()) + " columns, expected n");
  if (cfg.m > 0 && phi.rows() != cfg.m) throw ConfigError("phi does not have m rows");

  LinearOperator analysis = LinearOperator::zero(1, 1);
  switch (cfg.analysis_kind) {
    case AnalysisKind::identity:
      analysis = LinearOperator::identity(cfg.n);
      break;
    case AnalysisKind::tv1d:
      analysis = tv1d_operator(cfg.n);
      break;
    case AnalysisKind::tv2d:
      analysis = tv2d_operator(cfg.tv_height, cfg.tv_width);
      break;
    case AnalysisKind::tight_frame:
      analysis = parseval_frame(cfg.p, cfg.n, rng);
      break;
    case AnalysisKind::from_file:
      analysis = load_operator_csv(cfg.analysis_file);
      break;
  }
  if (analysis.cols() != cfg.n) throw ConfigError("analysis operator must have n columns");
  if (cfg.p != 0 && analysis.rows() != cfg.p) throw ConfigError("analysis operator must have p rows");

  DecomposableNorm norm = [&] {
    try {
      return make_norm(cfg, analysis.rows());
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(std::string("norm: ") + e.what());
    }
  }();
  if (norm.ambient_dim() != analysis.rows())
    throw ConfigError("norm dimension does not match the analysis operator");

  Vector x0;
  if (cfg.x0) {
    x0 = *cfg.x0;
  } else if (norm.kind() == NormKind::nuclear) {
    x0 = low_rank_signal(analysis, norm, *cfg.active, rng);
  } else {
    x0 = sparse_analysis_signal(analysis, norm, *cfg.active, rng);
  }

  const Vector clean = phi.apply(x0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<std::vector<NoiseDraw>> draws;
  for (double eps : cfg.epsilons) {
    std::vector<NoiseDraw> row;
    for (int t = 0; t < cfg.trials; ++t) {
      const Vector g = gaussian_vector(phi.rows(), rng);
      const double radius = unif(rng) * eps;
      const double gn = g.norm();
      const Vector w = radius > 0.0 && gn > 0.0 ? Vector(g * (radius / gn)) : Vector(Vector::Zero(phi.rows()));
      row.push_back({clean + w, w.norm()});
    }
    draws.push_back(std::move(row));
  }
  return Scenario{std::move(phi), std::move(analysis), std::move(norm), std::move(x0),
                  cfg.epsilons, std::move(draws)};
}

}  // namespace adp
