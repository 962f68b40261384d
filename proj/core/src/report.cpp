#include "adp/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>

namespace adp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string short_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

// Observed errors only; used when no certificate (hence no bound) exists.
BoundCheckReport unbounded_report(const Scenario& sc, const DecompositionModel& model,
                                  const SolveReport& rep, const std::string& why) {
  BoundCheckReport r;
  r.preconditions_valid = false;
  r.precondition_note = why;
  const Vector diff = rep.x_star - sc.x0;
  r.prediction = {sc.phi.apply(diff).norm(), kInf, false};
  r.bregman = {std::numeric_limits<double>::quiet_NaN(), kInf, false};
  r.nonsaturated_l2 = {model.complement.project(sc.analysis.apply(diff)).norm(), kInf, false};
  r.l2 = {diff.norm(), kInf, false};
  return r;
}

}  // namespace

ScenarioOutcome evaluate_scenario(const ScenarioConfig& cfg, const Scenario& sc) {
  ScenarioOutcome out;
  const DecompositionModel model = decompose_at(sc.norm, sc.analysis.apply(sc.x0));
  out.nsp = strong_nsp_check(sc.phi, sc.analysis, model, sc.norm);
  try {
    const IcResult full = minimize_ic_full(sc.phi, sc.analysis, sc.norm, model, cfg.solver);
    const IcResult u_only = minimize_ic_u(sc.phi, sc.analysis, sc.norm, model, cfg.solver);
    out.ic_full = full.ic;
    out.ic_u = u_only.ic;
    out.ic_zero = ic_value(sc.phi, sc.analysis, sc.norm, model, Vector::Zero(sc.norm.ambient_dim()),
                           Vector::Zero(sc.phi.rows()));
    out.certificate = build_certificate(sc.phi, sc.analysis, sc.norm, model, cfg.certificate_mode,
                                        cfg.solver);
    out.bound = stability_constants(sc.phi, sc.analysis, sc.norm, model.complement,
                                     *out.certificate, cfg.c, cfg.frame_lower_bound);
    out.certificate_verdict = uniqueness_from_certificate(*out.certificate, out.bound->c_phi);
  } catch (const std::exception& e) {
    out.failure = e.what();
  }

  for (std::size_t k = 0; k < sc.epsilons.size(); ++k) {
    const double eps = std::max(sc.epsilons[k], kEpsilonFloor);
    const double lambda = cfg.c * eps;
    for (int t = 0; t < static_cast<int>(sc.draws[k].size()); ++t) {
      const NoiseDraw& draw = sc.draws[k][static_cast<std::size_t>(t)];
      const Problem pb{sc.phi, sc.analysis, sc.norm, draw.y, lambda};
      const SolveReport rep = solve_penalized(pb, cfg.solver);
      TrialRow row;
      row.trial = t;
      row.epsilon = sc.epsilons[k];
      row.c = cfg.c;
      if (out.bound) {
        row.check = verify_bounds(sc.phi, sc.analysis, sc.norm, sc.x0, *out.certificate,
                                  model.complement, {eps, cfg.c, lambda, draw.noise_norm}, rep,
                                  *out.bound);
      } else {
        row.check = unbounded_report(sc, model, rep, out.failure);
      }
      if (row.check.preconditions_valid && !row.check.pass_all()) out.violation = true;
      out.rows.push_back(std::move(row));
    }
  }
  return out;
}

void write_results_csv(std::ostream& out, const std::vector<TrialRow>& rows) {
  out << "trial,epsilon,c,observed_pred,bound_pred,observed_bregman,bound_bregman,observed_ls0,"
         "bound_ls0,observed_l2,bound_l2,pass_all\n";
  for (const TrialRow& r : rows) {
    const BoundCheckReport& b = r.check;
    out << r.trial << ',' << num(r.epsilon) << ',' << num(r.c) << ',' << num(b.prediction.observed)
        << ',' << num(b.prediction.bound) << ',' << num(b.bregman.observed) << ','
        << num(b.bregman.bound) << ',' << num(b.nonsaturated_l2.observed) << ','
        << num(b.nonsaturated_l2.bound) << ',' << num(b.l2.observed) << ',' << num(b.l2.bound)
        << ',' << (b.pass_all() ? "true" : "false") << '\n';
  }
}

void write_summary(std::ostream& out, const ScenarioConfig& cfg, const Scenario& sc,
                   const ScenarioOutcome& o) {
  out << "seed: " << cfg.seed << '\n';
  out << "dims: M=" << sc.phi.rows() << " N=" << sc.phi.cols() << " P=" << sc.analysis.rows()
      << '\n';
  out << "phi: " << to_string(cfg.phi_kind) << '\n';
  out << "analysis: " << to_string(cfg.analysis_kind) << '\n';
  out << "norm: " << to_string(sc.norm.kind()) << '\n';
  out << "certificate_mode: " << to_string(cfg.certificate_mode) << '\n';
  out << "frame_mode: " << (cfg.frame_lower_bound ? num(*cfg.frame_lower_bound) : "off") << '\n';
  out << "ic_full: " << num(o.ic_full) << '\n';
  out << "ic_u: " << num(o.ic_u) << '\n';
  out << "ic_zero: " << num(o.ic_zero) << '\n';
  if (o.certificate) {
    out << "saturation: " << num(o.certificate->saturation) << '\n';
    out << "source_residual: " << num(o.certificate->source_residual) << '\n';
    out << "eta_norm: " << num(o.certificate->eta.norm()) << '\n';
  }
  if (o.bound) {
    const StabilityBound& b = *o.bound;
    out << "c_phi: " << num(b.c_phi) << '\n';
    out << "c_l: " << num(b.c_l) << '\n';
    out << "c_a: " << num(b.c_a) << '\n';
    out << "phi_norm: " << num(b.phi_norm) << '\n';
    out << "c1: " << num(b.c1) << '\n';
    out << "c2: " << num(b.c2) << '\n';
    out << "total_c: " << num(b.total_c) << '\n';
  }
  out << "nsp_verdict: " << to_string(o.nsp.status) << " (min_gap " << num(o.nsp.min_gap) << ")\n";
  if (o.bound) out << "certificate_verdict: " << to_string(o.certificate_verdict.status) << '\n';
  if (!o.failure.empty()) out << "failure: " << o.failure << '\n';
  std::size_t valid = 0;
  std::size_t passed = 0;
  for (const TrialRow& r : o.rows) {
    if (r.check.preconditions_valid) ++valid;
    if (r.check.pass_all()) ++passed;
  }
  out << "rows: " << o.rows.size() << '\n';
  out << "rows_with_valid_preconditions: " << valid << '\n';
  out << "rows_passing: " << passed << '\n';
  out << "violation: " << (o.violation ? "yes" : "no") << '\n';
}

void write_error_plot_svg(std::ostream& out, const ScenarioOutcome& o) {
  // Worst observed error per epsilon against the C eps line.
  std::map<double, double> worst;
  for (const TrialRow& r : o.rows) {
    auto [it, fresh] = worst.emplace(r.epsilon, r.check.l2.observed);
    if (!fresh) it->second = std::max(it->second, r.check.l2.observed);
  }
  const double width = 640;
  const double height = 400;
  const double margin = 60;
  const double total_c = o.bound ? o.bound->total_c : kInf;
  double x_max = 0.0;
  double y_max = 0.0;
  for (const auto& [eps, err] : worst) {
    x_max = std::max(x_max, eps);
    y_max = std::max(y_max, err);
    if (std::isfinite(total_c)) y_max = std::max(y_max, total_c * eps);
  }
  if (x_max <= 0.0) x_max = 1.0;
  if (y_max <= 0.0) y_max = 1.0;
  auto px = [&](double x) { return margin + (width - 2 * margin) * x / x_max; };
  auto py = [&](double y) { return height - margin - (height - 2 * margin) * y / y_max; };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\"" << width - margin
      << "\" y2=\"" << height - margin << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin << "\" y2=\""
      << height - margin << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"" << height - 15
      << "\" text-anchor=\"middle\" font-size=\"14\">epsilon (max " << short_num(x_max)
      << ")</text>\n";
  out << "<text x=\"15\" y=\"" << height / 2 << "\" font-size=\"14\" transform=\"rotate(-90 15 "
      << height / 2 << ")\" text-anchor=\"middle\">||x* - x0|| (max " << short_num(y_max)
      << ")</text>\n";
  if (std::isfinite(total_c)) {
    out << "<line x1=\"" << px(0) << "\" y1=\"" << py(0) << "\" x2=\"" << px(x_max) << "\" y2=\""
        << py(total_c * x_max) << "\" stroke=\"red\" stroke-dasharray=\"6,4\"/>\n";
    out << "<text x=\"" << width - margin << "\" y=\"" << margin - 10
        << "\" text-anchor=\"end\" font-size=\"12\" fill=\"red\">C eps, C = " << short_num(total_c)
        << "</text>\n";
  }
  out << "<polyline fill=\"none\" stroke=\"blue\" points=\"";
  for (const auto& [eps, err] : worst) out << px(eps) << ',' << py(err) << ' ';
  out << "\"/>\n";
  for (const auto& [eps, err] : worst)
    out << "<circle cx=\"" << px(eps) << "\" cy=\"" << py(err) << "\" r=\"3\" fill=\"blue\"/>\n";
  out << "</svg>\n";
}

int run_scenario(const ScenarioConfig& cfg, const std::filesystem::path& out_dir) {
  const Scenario sc = generate_scenario(cfg);
  const ScenarioOutcome o = evaluate_scenario(cfg, sc);
  std::filesystem::create_directories(out_dir);
  auto open = [&](const char* name) {
    std::ofstream f(out_dir / name);
    if (!f) throw std::runtime_error("cannot write " + (out_dir / name).string());
    return f;
  };
  {
    auto f = open("results.csv");
    write_results_csv(f, o.rows);
  }
  {
    auto f = open("summary.txt");
    write_summary(f, cfg, sc, o);
  }
  {
    auto f = open("error_vs_eps.svg");
    write_error_plot_svg(f, o);
  }
  return o.violation ? 1 : 0;
}

}  // namespace adp
