#include <gtest/gtest.h>

#include "adp/experiments.hpp"
#include "generators.hpp"
#include "oracles.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace adp;
namespace fs = std::filesystem;

namespace {

const char* kSmoke = R"({
  "seed": 5,
  "dims": {"m": 8, "n": 8},
  "phi": {"kind": "identity"},
  "analysis": {"kind": "identity"},
  "norm": {"kind": "l1"},
  "signal": {"active": 2},
  "epsilons": [0, 0.01, 0.1],
  "trials": 4,
  "c": 2.0
})";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("adp_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string with(const std::string& key_value) {
  std::string s = kSmoke;
  return s.insert(s.rfind('}'), ", " + key_value);
}

}  // namespace

TEST(Config, ParsesAllSections) {
  const auto cfg = parse_scenario_config(R"({
    "seed": 9, "dims": {"m": 3, "n": 4},
    "phi": {"kind": "convolution", "kernel": [1, 0.5]},
    "analysis": {"kind": "tv1d"},
    "norm": {"kind": "group", "blocks": [[1], [2, 3]]},
    "signal": {"x0": [1, 1, 2, 2]},
    "epsilons": [0.1, 0.2], "trials": 3, "c": 0.5,
    "certificate_mode": "u_only",
    "frame_mode": 0.5,
    "solver": {"tol": 1e-8, "max_iter": 1000}
  })");
  EXPECT_EQ(cfg.seed, 9u);
  EXPECT_EQ(cfg.m, 3);
  EXPECT_EQ(cfg.phi_kind, PhiKind::convolution);
  EXPECT_EQ(cfg.conv_kernel, (std::vector<double>{1, 0.5}));
  EXPECT_EQ(cfg.analysis_kind, AnalysisKind::tv1d);
  EXPECT_EQ(cfg.norm_kind, NormKind::group);
  EXPECT_EQ(cfg.blocks, (std::vector<std::vector<Index>>{{0}, {1, 2}}));
  ASSERT_TRUE(cfg.x0.has_value());
  EXPECT_EQ(cfg.x0->size(), 4);
  EXPECT_EQ(cfg.trials, 3);
  EXPECT_EQ(cfg.certificate_mode, CertificateMode::u_only);
  EXPECT_EQ(cfg.frame_lower_bound, 0.5);
  EXPECT_EQ(cfg.solver.tol, 1e-8);
  EXPECT_EQ(cfg.solver.max_iter, 1000);
}

TEST(Config, FrameModeTrueMeansParseval) {
  const auto cfg = parse_scenario_config(with(R"("frame_mode": true)"));
  EXPECT_EQ(cfg.frame_lower_bound, 1.0);
  EXPECT_FALSE(parse_scenario_config(with(R"("frame_mode": false)")).frame_lower_bound.has_value());
}

TEST(Config, RejectsMalformedInput) {
  EXPECT_THROW(parse_scenario_config("{"), ConfigError);
  EXPECT_THROW(parse_scenario_config("[]"), ConfigError);
  EXPECT_THROW(parse_scenario_config(with(R"("bogus": 1)")), ConfigError);
  EXPECT_THROW(parse_scenario_config(with(R"("certificate_mode": "best")")), ConfigError);
  EXPECT_THROW(parse_scenario_config(R"({"dims": {"m": 2, "n": 2}})"), ConfigError);
  std::string bad_kind = kSmoke;
  bad_kind.replace(bad_kind.find("\"identity\""), 10, "\"random\"");
  EXPECT_THROW(parse_scenario_config(bad_kind), ConfigError);
}

TEST(Config, ValidationCatchesInconsistencies) {
  auto cfg = parse_scenario_config(kSmoke);
  EXPECT_NO_THROW(validate(cfg));
  auto c = cfg;
  c.epsilons = {0.1, 0.01};
  EXPECT_THROW(validate(c), ConfigError);
  c = cfg;
  c.epsilons = {-0.1};
  EXPECT_THROW(validate(c), ConfigError);
  c = cfg;
  c.trials = 0;
  EXPECT_THROW(validate(c), ConfigError);
  c = cfg;
  c.c = 0.0;
  EXPECT_THROW(validate(c), ConfigError);
  c = cfg;
  c.m = 5;  // identity phi needs M = N
  EXPECT_THROW(validate(c), ConfigError);
  c = cfg;
  c.x0 = Vector::Ones(8);  // both active and x0
  EXPECT_THROW(validate(c), ConfigError);
  c = cfg;
  c.analysis_kind = AnalysisKind::tv1d;
  c.p = 8;  // tv1d forces P = N - 1
  EXPECT_THROW(validate(c), ConfigError);
  c = cfg;
  c.norm_kind = NormKind::nuclear;
  c.nuclear_rows = 3;
  c.nuclear_cols = 3;
  EXPECT_THROW(validate(c), ConfigError);
}

TEST(Config, LoadResolvesRelativePaths) {
  const fs::path dir = fresh_dir("paths");
  {
    std::ofstream(dir / "phi.csv") << "2,2\n1,0\n0,1\n";
    std::ofstream(dir / "cfg.json") << R"({"dims": {"m": 2, "n": 2}, "phi": {"kind": "from_file", "path": "phi.csv"},
      "analysis": {"kind": "identity"}, "norm": {"kind": "l1"}, "signal": {"active": 1}})";
  }
  const auto cfg = load_scenario_config(dir / "cfg.json");
  EXPECT_EQ(cfg.phi_file, dir / "phi.csv");
  const auto sc = generate_scenario(cfg);
  EXPECT_EQ(sc.phi.matrix(), Matrix::Identity(2, 2));
  EXPECT_THROW(load_scenario_config(dir / "missing.json"), ConfigError);
}

TEST(Operators, Tv1dStencil) {
  const Matrix d = tv1d_operator(4).matrix();
  Matrix expect(3, 4);
  expect << -1, 1, 0, 0, 0, -1, 1, 0, 0, 0, -1, 1;
  EXPECT_EQ(d, expect);
}

TEST(Operators, TvAnnihilatesConstants) {
  EXPECT_LE((tv1d_operator(7).matrix() * Vector::Constant(7, 3.5)).norm(), 0.0);
  const Matrix d2 = tv2d_operator(3, 4).matrix();
  EXPECT_EQ(d2.rows(), 2 * 12 - 3 - 4);
  EXPECT_EQ(d2.cols(), 12);
  EXPECT_LE((d2 * Vector::Constant(12, -2.0)).norm(), 0.0);
  // Kernel is exactly the constants.
  EXPECT_EQ(oracle::lu_kernel(d2).cols(), 1);
}

TEST(Operators, Tv2dPixelLayout) {
  // Pixel (i, j) at index i + j h.
  const Index h = 3;
  const Index w = 2;
  const Matrix d = tv2d_operator(h, w).matrix();
  Vector ramp(h * w);
  for (Index j = 0; j < w; ++j)
    for (Index i = 0; i < h; ++i) ramp(i + j * h) = static_cast<double>(i);
  const Vector g = d * ramp;
  // Horizontal differences (along j) come first and vanish on a ramp in i.
  const Index n_dx = h * (w - 1);
  EXPECT_TRUE(g.head(n_dx).isZero(0.0));
  EXPECT_TRUE(g.tail(d.rows() - n_dx).isApprox(Vector::Ones(d.rows() - n_dx)));
  const auto blocks = tv2d_isotropic_blocks(h, w);
  std::vector<int> seen(static_cast<std::size_t>(d.rows()), 0);
  for (const auto& b : blocks) {
    EXPECT_LE(b.size(), 2u);
    for (Index i : b) ++seen[static_cast<std::size_t>(i)];
  }
  for (int s : seen) EXPECT_EQ(s, 1);
}

TEST(Operators, ParsevalFrameAndConvolution) {
  std::mt19937_64 rng(3);
  const Matrix f = parseval_frame(9, 5, rng).matrix();
  EXPECT_LE((f.transpose() * f - Matrix::Identity(5, 5)).norm(), 1e-12);
  const Matrix c = circular_convolution(5, {1, 2}).matrix();
  Vector e0 = Vector::Zero(5);
  e0(0) = 1;
  Vector expect = Vector::Zero(5);
  expect(0) = 1;
  expect(1) = 2;
  EXPECT_EQ(c * e0, expect);
  EXPECT_NEAR(c.row(0).sum(), 3.0, 1e-15);
}

TEST(GenerateScenario, DeterministicAndNoiselessAtZero) {
  const auto cfg = parse_scenario_config(kSmoke);
  const auto a = generate_scenario(cfg);
  const auto b = generate_scenario(cfg);
  EXPECT_EQ(a.x0, b.x0);
  EXPECT_EQ(a.phi.matrix(), b.phi.matrix());
  ASSERT_EQ(a.draws.size(), 3u);
  for (std::size_t e = 0; e < a.draws.size(); ++e) {
    ASSERT_EQ(a.draws[e].size(), 4u);
    for (std::size_t t = 0; t < a.draws[e].size(); ++t) {
      EXPECT_EQ(a.draws[e][t].y, b.draws[e][t].y);
      EXPECT_LE(a.draws[e][t].noise_norm, cfg.epsilons[e]);
      EXPECT_NEAR((a.draws[e][t].y - a.phi.apply(a.x0)).norm(), a.draws[e][t].noise_norm, 1e-14);
    }
  }
  for (const auto& d : a.draws[0]) EXPECT_EQ(d.y, a.phi.apply(a.x0));
}

TEST(GenerateScenario, SignalHasRequestedStructure) {
  for (int active : {1, 2, 3}) {
    auto cfg = parse_scenario_config(R"({"seed": 11, "dims": {"m": 10, "n": 14},
      "phi": {"kind": "gaussian"}, "analysis": {"kind": "tv1d"}, "norm": {"kind": "l1"},
      "signal": {"active": 1}})");
    cfg.active = active;
    const auto sc = generate_scenario(cfg);
    EXPECT_EQ(decompose_at(sc.norm, sc.analysis.apply(sc.x0)).model_space.dim(), active);
  }
  auto nuc = parse_scenario_config(R"({"seed": 1, "dims": {"m": 12, "n": 16},
    "phi": {"kind": "gaussian"}, "analysis": {"kind": "identity"},
    "norm": {"kind": "nuclear", "nrows": 4, "ncols": 4}, "signal": {"active": 2}})");
  const auto sc = generate_scenario(nuc);
  EXPECT_EQ(decompose_at(sc.norm, sc.x0).model_space.dim(), 2 * (4 + 4 - 2));
}

TEST(GenerateScenario, InfeasibleSignalIsConfigError) {
  auto cfg = parse_scenario_config(kSmoke);
  cfg.active = 9;
  EXPECT_THROW(generate_scenario(cfg), ConfigError);
}

TEST(OracleSolve, SoftThresholdAndLargeLambda) {
  testgen::Gen g(1);
  const auto id = LinearOperator::identity(5);
  const auto l1 = DecomposableNorm::l1(5);
  const Vector y = 2.0 * g.vector(5);
  const auto rep = oracle_solve(make_problem(id, id, l1, y, 0.7));
  for (Index i = 0; i < 5; ++i) {
    const double st = y(i) > 0.7 ? y(i) - 0.7 : (y(i) < -0.7 ? y(i) + 0.7 : 0.0);
    EXPECT_NEAR(rep.x_star(i), st, 1e-8);
  }
  const auto big = oracle_solve(make_problem(id, id, l1, y, 1e3));
  EXPECT_LE(big.x_star.norm(), 1e-8);
}

TEST(OracleSolve, DimensionGuard) {
  const auto id = LinearOperator::identity(9);
  EXPECT_THROW(oracle_solve(make_problem(id, id, DecomposableNorm::l1(9), Vector::Ones(9), 1.0)), DimensionError);
}

TEST(OracleSolve, MutualDominationWithSolver) {
  testgen::Gen g(2);
  for (auto kind : testgen::kAllKinds) {
    int done = 0;
    while (done < 3) {
      const Index n = g.integer(2, 6);
      const Index p = g.integer(2, 6);
      const Index m = g.integer(1, 5);
      const auto norm = g.norm(kind, p);
      Problem pr{LinearOperator(g.matrix(m, n)), LinearOperator(g.matrix(p, n)), norm, g.vector(m),
                 g.uniform(0.05, 1.0)};
      try {
        validate(pr);
      } catch (const InjectivityError&) {
        continue;
      }
      ++done;
      const auto ours = solve_penalized(pr);
      const auto ref = oracle_solve(pr);
      EXPECT_LE(ref.objective, ours.objective + 1e-7) << to_string(kind);
      EXPECT_LE(ours.objective, ref.objective + 1e-7) << to_string(kind);
    }
  }
}

TEST(RunScenario, SmokeWritesReportsAndPasses) {
  const fs::path dir = fresh_dir("smoke");
  const auto cfg = parse_scenario_config(kSmoke);
  EXPECT_EQ(run_scenario(cfg, dir), 0);
  const std::string csv = slurp(dir / "results.csv");
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line,
            "trial,epsilon,c,observed_pred,bound_pred,observed_bregman,bound_bregman,observed_ls0,bound_ls0,"
            "observed_l2,bound_l2,pass_all");
  int rows = 0;
  while (std::getline(lines, line)) {
    ++rows;
    EXPECT_EQ(line.substr(line.rfind(',') + 1), "true");
  }
  EXPECT_EQ(rows, 12);
  const std::string summary = slurp(dir / "summary.txt");
  EXPECT_NE(summary.find("saturation"), std::string::npos);
  const std::string svg = slurp(dir / "error_vs_eps.svg");
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
}

TEST(RunScenario, NoiselessErrorIsTiny) {
  const auto cfg = parse_scenario_config(kSmoke);
  const auto sc = generate_scenario(cfg);
  const auto out = evaluate_scenario(cfg, sc);
  ASSERT_TRUE(out.failure.empty()) << out.failure;
  for (const auto& r : out.rows) {
    if (r.epsilon == 0.0) EXPECT_LE(r.check.l2.observed, 1e-6);
    EXPECT_LE(r.check.l2.observed, r.check.l2.bound);
  }
  EXPECT_LE(out.ic_full, out.ic_u + 1e-7);
  EXPECT_LE(out.ic_u, out.ic_zero + 1e-7);
}

TEST(RunScenario, ByteIdenticalReruns) {
  const auto cfg = parse_scenario_config(kSmoke);
  const fs::path a = fresh_dir("det_a");
  const fs::path b = fresh_dir("det_b");
  run_scenario(cfg, a);
  run_scenario(cfg, b);
  for (const char* f : {"results.csv", "summary.txt", "error_vs_eps.svg"}) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
}

TEST(RunScenario, SaturatedCertificateIsRecordedNotAViolation) {
  // Phi = [1 2] cannot recover (1, 0): the IC exceeds one.
  const fs::path dir = fresh_dir("saturated");
  const fs::path phi = dir / "phi.csv";
  std::ofstream(phi) << "1,2\n1,2\n";
  auto cfg = parse_scenario_config(R"({"dims": {"m": 1, "n": 2}, "phi": {"kind": "from_file", "path": "phi.csv"},
      "analysis": {"kind": "identity"}, "norm": {"kind": "l1"}, "signal": {"x0": [1, 0]},
      "epsilons": [0.01]})",
                                    dir);
  const auto sc = generate_scenario(cfg);
  const auto out = evaluate_scenario(cfg, sc);
  EXPECT_FALSE(out.failure.empty());
  EXPECT_FALSE(out.violation);
  EXPECT_EQ(out.nsp.status, UniquenessStatus::violated);
  EXPECT_EQ(run_scenario(cfg, dir), 0);
}
