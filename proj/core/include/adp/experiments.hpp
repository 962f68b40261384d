#pragma once

// Scenario generation, the brute-force oracle for tiny instances, and the
// noise-level sweep that writes results.csv / summary.txt / error_vs_eps.svg.

#include "adp/certificates.hpp"
#include "adp/guarantees.hpp"
#include "adp/linops.hpp"
#include "adp/norms.hpp"
#include "adp/solver.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace adp {

/// Malformed or inconsistent scenario configuration (CLI exit code 2).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class PhiKind { gaussian, identity, convolution, from_file };
enum class AnalysisKind { identity, tv1d, tv2d, tight_frame, from_file };

std::string to_string(PhiKind kind);
std::string to_string(AnalysisKind kind);

struct ScenarioConfig {
  std::uint64_t seed = 0;
  Index m = 0;
  Index n = 0;
  Index p = 0;  // 0: derived from the analysis kind

  PhiKind phi_kind = PhiKind::gaussian;
  std::vector<double> conv_kernel;  // circular convolution taps
  std::filesystem::path phi_file;

  AnalysisKind analysis_kind = AnalysisKind::identity;
  Index tv_height = 0;
  Index tv_width = 0;
  std::filesystem::path analysis_file;  // CSV of L^* (P x N)

  NormKind norm_kind = NormKind::l1;
  std::vector<std::vector<Index>> blocks;  // 0-based
  bool isotropic = false;                  // tv2d + group: pair dx/dy per pixel
  Index nuclear_rows = 0;
  Index nuclear_cols = 0;

  /// Support size (l1), number of active blocks (group) or rank (nuclear) of
  /// u0 = L^* x0.
  std::optional<Index> active;
  std::optional<Vector> x0;

  std::vector<double> epsilons{0.0};
  int trials = 1;
  double c = 1.0;
  CertificateMode certificate_mode = CertificateMode::full;
  /// Lower frame bound a; enables the frame-mode constants.
  std::optional<double> frame_lower_bound;

  SolverOptions solver;
};

/// Parses the JSON scenario schema. Relative file paths resolve against
/// `base_dir`. Throws ConfigError.
ScenarioConfig parse_scenario_config(const std::string& json_text,
                                     const std::filesystem::path& base_dir = {});
ScenarioConfig load_scenario_config(const std::filesystem::path& path);
/// Throws ConfigError on inconsistent dimensions or parameters.
void validate(const ScenarioConfig& cfg);

struct NoiseDraw {
  Vector y;
  double noise_norm = 0.0;
};

struct Scenario {
  LinearOperator phi;
  LinearOperator analysis;
  DecomposableNorm norm;
  Vector x0;
  std::vector<double> epsilons;
  std::vector<std::vector<NoiseDraw>> draws;  // [epsilon][trial]
};

/// Deterministic in cfg.seed. Noise is a Gaussian direction rescaled to
/// radius u * eps, u ~ U[0, 1]. Throws ConfigError for infeasible signals.
Scenario generate_scenario(const ScenarioConfig& cfg);

// Operator builders.
LinearOperator gaussian_operator(Index m, Index n, std::mt19937_64& rng);
LinearOperator circular_convolution(Index n, const std::vector<double>& kernel);
LinearOperator tv1d_operator(Index n);
LinearOperator tv2d_operator(Index height, Index width);
/// Per-pixel (dx, dy) blocks of tv2d_operator rows; border pixels give
/// singleton blocks.
std::vector<std::vector<Index>> tv2d_isotropic_blocks(Index height, Index width);
/// First n columns of a random p x p orthogonal matrix: L^* with L L^* = Id.
LinearOperator parseval_frame(Index p, Index n, std::mt19937_64& rng);

struct OracleOptions {
  long subgradient_iters = 20000;
  int admm_iters = 200000;
  double admm_tol = 1e-14;
};

inline constexpr Index kOracleMaxDim = 8;

/// Independent reference solver for N, P <= 8: averaged subgradient descent,
/// ADMM refinement, then an exact sign-restricted polish for l1. Returns the
/// best-objective candidate. Throws DimensionError above the size guard.
SolveReport oracle_solve(const Problem& problem, const OracleOptions& opts = {});

/// Lambda floor used for eps = 0 (the penalized problem needs lambda > 0).
inline constexpr double kEpsilonFloor = 1e-9;

struct TrialRow {
  int trial = 0;
  double epsilon = 0.0;
  double c = 0.0;
  BoundCheckReport check;
};

struct ScenarioOutcome {
  std::vector<TrialRow> rows;
  std::optional<DualCertificate> certificate;
  std::optional<StabilityBound> bound;
  double ic_full = 0.0;
  double ic_u = 0.0;
  double ic_zero = 0.0;
  UniquenessVerdict nsp;
  UniquenessVerdict certificate_verdict;
  std::string failure;  // stage failure preventing bound checks, if any
  /// Some pass_all = false under valid preconditions.
  bool violation = false;
};

ScenarioOutcome evaluate_scenario(const ScenarioConfig& cfg, const Scenario& scenario);

void write_results_csv(std::ostream& out, const std::vector<TrialRow>& rows);
void write_summary(std::ostream& out, const ScenarioConfig& cfg, const Scenario& scenario,
                   const ScenarioOutcome& outcome);
void write_error_plot_svg(std::ostream& out, const ScenarioOutcome& outcome);

/// Generates, evaluates and writes results.csv, summary.txt and
/// error_vs_eps.svg into out_dir. Returns the process exit code (0 or 1).
int run_scenario(const ScenarioConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace adp
