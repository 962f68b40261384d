// adp: solve, certify and stress-test analysis-regularized recovery from a
// JSON scenario file.

#include "CLI11.hpp"

#include "adp/experiments.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>

namespace {

constexpr int kExitViolation = 1;
constexpr int kExitConfig = 2;

struct CommonArgs {
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
  std::optional<int> max_iter;
};

void add_common(CLI::App* sub, CommonArgs& args) {
  sub->add_option("--config", args.config, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  sub->add_option("--out", args.out, "Output directory");
  sub->add_option("--seed", args.seed, "Override the scenario seed");
  sub->add_option("--tol", args.tol, "Solver tolerance");
  sub->add_option("--max-iter", args.max_iter, "Solver iteration cap");
}

adp::ScenarioConfig load(const CommonArgs& args) {
  adp::ScenarioConfig cfg = adp::load_scenario_config(args.config);
  if (args.seed) cfg.seed = *args.seed;
  if (args.tol) cfg.solver.tol = *args.tol;
  if (args.max_iter) cfg.solver.max_iter = *args.max_iter;
  adp::validate(cfg);
  return cfg;
}

std::filesystem::path out_dir(const CommonArgs& args) {
  std::filesystem::path dir(args.out);
  std::filesystem::create_directories(dir);
  return dir;
}

adp::DecompositionModel model_of(const adp::Scenario& sc) {
  return adp::decompose_at(sc.norm, sc.analysis.apply(sc.x0));
}

int cmd_solve(const CommonArgs& args) {
  const adp::ScenarioConfig cfg = load(args);
  const adp::Scenario sc = adp::generate_scenario(cfg);
  const double eps = std::max(sc.epsilons.front(), adp::kEpsilonFloor);
  const adp::Problem pb{sc.phi, sc.analysis, sc.norm, sc.draws.front().front().y, cfg.c * eps};
  const adp::SolveReport rep = adp::solve_penalized(pb, cfg.solver);
  const auto dir = out_dir(args);
  adp::save_operator_csv(dir / "x_star.csv", adp::LinearOperator(adp::Matrix(rep.x_star)));
  std::printf("lambda %.6g\nobjective %.12g\noptimality_residual %.3e\niterations %d\nconverged %s\n"
              "error %.6g\n",
              pb.lambda, rep.objective, rep.optimality_residual, rep.iterations,
              rep.converged ? "yes" : "no", (rep.x_star - sc.x0).norm());
  return 0;
}

int cmd_certify(const CommonArgs& args) {
  const adp::ScenarioConfig cfg = load(args);
  const adp::Scenario sc = adp::generate_scenario(cfg);
  const adp::DecompositionModel model = model_of(sc);
  const adp::DualCertificate cert =
      adp::build_certificate(sc.phi, sc.analysis, sc.norm, model, cfg.certificate_mode, cfg.solver);
  adp::save_certificate_csv(out_dir(args) / "certificate.csv", cert);
  const auto verdict = adp::check_source_condition(sc.phi, sc.analysis, sc.norm, sc.x0, cert);
  std::printf("mode %s\nsaturation %.12g\nsource_residual %.3e\nsource_condition %s\n",
              adp::to_string(cfg.certificate_mode).c_str(), cert.saturation, cert.source_residual,
              verdict ? "valid" : verdict.reason.c_str());
  return 0;
}

int cmd_uniqueness(const CommonArgs& args) {
  const adp::ScenarioConfig cfg = load(args);
  const adp::Scenario sc = adp::generate_scenario(cfg);
  const adp::DecompositionModel model = model_of(sc);
  adp::NspOptions nsp;
  nsp.seed = cfg.seed;
  const adp::UniquenessVerdict v = adp::strong_nsp_check(sc.phi, sc.analysis, model, sc.norm, nsp);
  std::printf("strong_nsp %s\nmin_gap %.12g\n", adp::to_string(v.status).c_str(), v.min_gap);
  try {
    const adp::DualCertificate cert = adp::build_certificate(sc.phi, sc.analysis, sc.norm, model,
                                                             cfg.certificate_mode, cfg.solver);
    const adp::Matrix ls = model.complement.projector_matrix() * sc.analysis.matrix();
    const double c_phi = adp::restricted_injectivity_constant(
        sc.phi, ls.isZero(0.0) ? adp::Subspace::full(sc.phi.cols())
                               : adp::kernel_basis(adp::LinearOperator(ls)));
    const adp::UniquenessVerdict cv = adp::uniqueness_from_certificate(cert, c_phi);
    std::printf("certificate %s\nsaturation %.12g\nc_phi %.12g\n", adp::to_string(cv.status).c_str(),
                cert.saturation, c_phi);
  } catch (const adp::InjectivityError& e) {
    std::printf("certificate undecided (%s)\n", e.what());
  }
  return 0;
}

int cmd_sweep(const CommonArgs& args) {
  const adp::ScenarioConfig cfg = load(args);
  const int code = adp::run_scenario(cfg, out_dir(args));
  std::printf("wrote %s/results.csv, summary.txt, error_vs_eps.svg\n%s\n", args.out.c_str(),
              code == 0 ? "no bound violations" : "BOUND VIOLATION");
  return code;
}

int cmd_oracle(const CommonArgs& args) {
  const adp::ScenarioConfig cfg = load(args);
  const adp::Scenario sc = adp::generate_scenario(cfg);
  std::ofstream csv(out_dir(args) / "oracle_compare.csv");
  csv << "epsilon,trial,objective_solver,objective_oracle,relative_gap\n";
  bool agree = true;
  for (std::size_t k = 0; k < sc.epsilons.size(); ++k) {
    const double eps = std::max(sc.epsilons[k], adp::kEpsilonFloor);
    for (std::size_t t = 0; t < sc.draws[k].size(); ++t) {
      const adp::Problem pb{sc.phi, sc.analysis, sc.norm, sc.draws[k][t].y, cfg.c * eps};
      const double fs = adp::solve_penalized(pb, cfg.solver).objective;
      const double fo = adp::oracle_solve(pb).objective;
      const double rel = std::abs(fs - fo) / (1.0 + std::abs(fo));
      agree = agree && rel <= 1e-6;
      char line[160];
      std::snprintf(line, sizeof line, "%.17g,%zu,%.17g,%.17g,%.3e\n", sc.epsilons[k], t, fs, fo, rel);
      csv << line;
    }
  }
  std::printf("%s\n", agree ? "solver and oracle agree" : "solver and oracle DISAGREE");
  return agree ? 0 : kExitViolation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Certify and verify recovery guarantees for analysis-regularized inverse problems"};
  app.require_subcommand(1);
  CommonArgs args;
  auto* solve = app.add_subcommand("solve", "Solve the penalized problem for the first noise draw");
  auto* certify = app.add_subcommand("certify", "Build the dual certificate at x0");
  auto* uniq = app.add_subcommand("check-uniqueness", "Null space and certificate uniqueness verdicts");
  auto* sweep = app.add_subcommand("stability-sweep", "Noise sweep against the stability bounds");
  auto* oracle = app.add_subcommand("oracle-compare", "Compare the solver with the brute-force oracle");
  for (auto* sub : {solve, certify, uniq, sweep, oracle}) add_common(sub, args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*solve) return cmd_solve(args);
    if (*certify) return cmd_certify(args);
    if (*uniq) return cmd_uniqueness(args);
    if (*sweep) return cmd_sweep(args);
    if (*oracle) return cmd_oracle(args);
  } catch (const adp::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return 0;
}
