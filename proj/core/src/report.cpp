#include "buckle/report.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "buckle/io.hpp"
#include "json.hpp"

namespace buckle {
namespace {

using nlohmann::json;

json check_json(const Check& c) {
  return {{"name", c.name}, {"value", c.value}, {"tolerance", c.tolerance}, {"pass", c.pass}, {"anchor", c.anchor}};
}

json pass_rate_json(const PassRate& p) {
  return {{"tested", p.tested}, {"passed", p.passed}, {"excluded", p.excluded}, {"rate", p.rate()}};
}

json pairs_json(const std::vector<std::pair<double, double>>& xs) {
  json out = json::array();
  for (const auto& [a, b] : xs) out.push_back({a, b});
  return out;
}

json optional_json(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

json config_json(const RunConfig& c) {
  json out = json::object();
  std::istringstream in(serialize_config(c));
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    out[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return out;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace

std::vector<Check> run_checks(const RunResult& r) {
  std::vector<Check> out;
  const auto& pts = r.sweep.points;
  if (pts.empty()) return out;
  const double omega0 = r.config.omega0;
  const SweepPoint& last = pts.back();
  const Grid& g = last.mask.grid();

  out.push_back({"volume_saturation", static_cast<double>(r.sweep.saturation_violations), 0.0,
                 r.sweep.saturation_violations == 0,
                 "exact support measure never falls below omega0 minus the boundary-cell slack"});

  {
    const std::size_t first = pts.size() >= 2 ? pts.size() - 2 : 0;
    double worst = -1.0;
    Check c{"volume_equality", 0.0, 0.0, true, "for the smallest epsilons the support measure equals omega0 up to the boundary-cell slack"};
    for (std::size_t k = first; k < pts.size(); ++k) {
      const double dev = std::abs(pts[k].exact_measure - omega0);
      const double ratio = dev / pts[k].slack;
      if (ratio > worst) {
        worst = ratio;
        c.value = dev;
        c.tolerance = pts[k].slack;
      }
      c.pass = c.pass && dev <= pts[k].slack;
    }
    out.push_back(c);
  }

  const double bound = lambda_max(g.dim(), omega0) * (1.0 + 5.0 * g.h());
  out.push_back({"eigenvalue_bound", last.lambda_certified, bound, last.lambda_certified <= bound,
                 "certified buckling value of the extracted domain is at most the ball value of volume omega0, with staircase slack 5h"});

  if (!r.summaries.empty()) {
    const PointSummary& s = r.summaries.back();
    const double gap = s.relaxed_on_mask - last.lambda_relaxed;
    out.push_back({"relaxed_minimality", gap, 1e-6, gap <= 1e-6,
                   "eigensolve on the extracted support cannot exceed the relaxed field's Rayleigh quotient"});
    out.push_back({"connectedness", static_cast<double>(s.components), 1.0, s.components == 1,
                   "the optimal domain is connected"});
  }

  if (r.diagnostics) {
    const DiagnosticsReport& d = *r.diagnostics;
    out.push_back({"nondegeneracy", d.c0_estimate, 0.0, d.c0_estimate > 0.0,
                   "sup of the gradient on boundary-centred balls grows at least linearly in the radius"});
    out.push_back({"density", d.c1_estimate, 0.0, d.c1_estimate > 0.0,
                   "the domain occupies a fixed fraction of every boundary-centred ball"});
    out.push_back({"meanvalue", d.meanvalue_pass_rate, 0.95, d.meanvalue_pass_rate >= 0.95,
                   "ball averages of U are monotone in the radius, nonincreasing on the positive phase"});
    out.push_back({"boundary_sign", d.sign_check_pass_rate, 0.9, d.sign_check_pass_rate >= 0.9,
                   "U has the sign of the adjacent phase at the free boundary"});
    out.push_back({"first_variation", d.first_variation_pass_rate, 0.9, d.first_variation_pass_rate >= 0.9,
                   "signed first variation against nonnegative bumps is one-signed within tolerance"});
  }

  if (r.comparison) {
    const Comparison& c = *r.comparison;
    double best = std::numeric_limits<double>::infinity();
    for (const Candidate& k : c.candidates) best = std::min(best, k.value - c.minimizer.value);
    if (c.candidates.empty()) best = 0.0;
    out.push_back({"two_sided_comparison", best, 0.0, !c.any_lower,
                   "no shrunk-support candidate lowers the two-sided functional below the minimizer"});
  }
  return out;
}

std::string report_json(const RunResult& r) {
  json j;
  j["schema"] = "buckle-report/1";
  j["config"] = config_json(r.config);
  const Grid g = r.config.grid();
  j["grid"] = {{"dim", g.dim()}, {"h", g.h()}, {"nodes", g.nodes_per_axis()}, {"container_volume", g.container_volume()}};
  j["resumed"] = r.resumed;

  json points = json::array();
  for (std::size_t k = 0; k < r.sweep.points.size(); ++k) {
    const SweepPoint& p = r.sweep.points[k];
    json e = {{"epsilon", p.epsilon},
              {"exact_measure", p.exact_measure},
              {"lambda_relaxed", p.lambda_relaxed},
              {"lambda_certified", p.lambda_certified},
              {"slack", p.slack},
              {"iterations", p.state.iter},
              {"converged", p.state.converged},
              {"total", p.state.total},
              {"delta", p.state.cfg.delta}};
    if (k < r.summaries.size()) {
      e["components"] = r.summaries[k].components;
      e["c0"] = r.summaries[k].c0;
      e["c1"] = r.summaries[k].c1;
      e["lambda_relaxed_on_mask"] = r.summaries[k].relaxed_on_mask;
    }
    points.push_back(e);
  }
  const double omega0 = r.config.omega0;
  j["sweep"] = {{"points", points},
                {"epsilon0_lower", optional_json(r.sweep.epsilon0_lower)},
                {"epsilon0_upper", optional_json(r.sweep.epsilon0_upper)},
                {"epsilon0_estimate", epsilon0_estimate(g.dim(), omega0)},
                {"saturation_violations", r.sweep.saturation_violations},
                {"measure_monotone", r.sweep.measure_monotone}};

  if (!r.sweep.points.empty()) {
    const SweepPoint& last = r.sweep.points.back();
    const double lmax = lambda_max(g.dim(), omega0);
    j["final"] = {{"epsilon", last.epsilon},
                  {"exact_measure", last.exact_measure},
                  {"lambda_relaxed", last.lambda_relaxed},
                  {"lambda_certified", last.lambda_certified},
                  {"lambda_max", lmax},
                  {"epsilon1", epsilon1(last.lambda_certified, g.dim(), omega0)},
                  // informational: how close the domain value is to the ball value
                  {"ball_ratio", last.lambda_certified / lmax}};
  }

  if (r.diagnostics) j["diagnostics"] = json::parse(diagnostics_json(*r.diagnostics));

  if (r.comparison) {
    const Comparison& c = *r.comparison;
    json cands = json::array();
    for (const Candidate& k : c.candidates) {
      cands.push_back({{"label", k.label}, {"measure", k.measure}, {"rayleigh", k.rayleigh}, {"value", k.value}});
    }
    j["comparison"] = {{"epsilon", c.epsilon},
                       {"epsilon1", c.epsilon1},
                       {"minimizer", {{"measure", c.minimizer.measure}, {"rayleigh", c.minimizer.rayleigh}, {"value", c.minimizer.value}}},
                       {"candidates", cands},
                       {"any_lower", c.any_lower}};
  }

  json checks = json::array();
  bool all = true;
  for (const Check& c : run_checks(r)) {
    checks.push_back(check_json(c));
    all = all && c.pass;
  }
  j["checks"] = checks;
  j["all_checks_pass"] = all;
  j["warnings"] = r.warnings;
  return dump(j);
}

std::string sweep_csv(const RunResult& r) {
  std::string out = "epsilon,measure,lambda_relaxed,lambda_certified,components,c0,c1\n";
  for (std::size_t k = 0; k < r.sweep.points.size(); ++k) {
    const SweepPoint& p = r.sweep.points[k];
    const PointSummary s = k < r.summaries.size() ? r.summaries[k] : PointSummary{};
    out += format_real(p.epsilon) + "," + format_real(p.exact_measure) + "," + format_real(p.lambda_relaxed) + "," +
           format_real(p.lambda_certified) + "," + std::to_string(s.components) + "," + format_real(s.c0) + "," +
           format_real(s.c1) + "\n";
  }
  return out;
}

std::string diagnostics_json(const DiagnosticsReport& d) {
  json j = {{"lambda", d.lambda},
            {"volume", d.volume},
            {"slack", d.slack},
            {"components", d.components},
            {"c0_estimate", d.c0_estimate},
            {"c1_estimate", d.c1_estimate},
            {"c0_per_radius", pairs_json(d.nondegeneracy.per_radius)},
            {"c1_per_radius", pairs_json(d.density.per_radius)},
            {"boundary_points", d.density.points},
            {"boundary_fraction_by_level", pairs_json(d.boundary_fraction_by_level)},
            {"min_angle_bound", d.min_angle_bound},
            {"meanvalue", pass_rate_json(d.meanvalue)},
            {"sign_check", pass_rate_json(d.sign_check)},
            {"first_variation", pass_rate_json(d.first_variation)},
            {"branch_cells", d.branch_cells},
            {"phase_volumes", {{"positive", d.phase_volumes.positive}, {"negative", d.phase_volumes.negative}}},
            {"gamma0_cells", d.gamma0_cells},
            {"gamma1_cells", d.gamma1_cells},
            {"wall_distance", d.wall_distance}};
  return dump(j);
}

std::string certify_json(const DomainMask& mask, const EigenResult& e, int components) {
  const Grid& g = mask.grid();
  json j = {{"schema", "buckle-certify/1"},
            {"volume", mask.volume()},
            {"lambda", e.lambda},
            {"residual", e.residual},
            {"iterations", e.iterations},
            {"components", components},
            {"slack", boundary_slack(mask)},
            {"ball_value_same_volume", lambda_max(g.dim(), mask.volume())},
            {"ball_ratio", e.lambda / lambda_max(g.dim(), mask.volume())}};
  return dump(j);
}

}  // namespace buckle
