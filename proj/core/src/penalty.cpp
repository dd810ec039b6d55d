#include "buckle/penalty.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "buckle/error.hpp"
#include "buckle/operators.hpp"

namespace buckle {

void PenaltyConfig::validate(double container_volume) const {
  if (!(epsilon > 0.0)) throw ContractError("penalty: epsilon must be > 0");
  if (!(delta > 0.0)) throw ContractError("penalty: delta must be > 0");
  if (!(omega0 > 0.0)) throw ContractError("penalty: omega0 must be > 0");
  if (!(omega0 < container_volume)) {
    std::ostringstream msg;
    msg << "penalty: omega0=" << omega0 << " must be below the container volume " << container_volume;
    throw ContractError(msg.str());
  }
}

double support_measure(const ScalarField& v, double threshold) {
  if (threshold < 0.0) throw ContractError("support_measure: threshold must be >= 0");
  const Grid& g = v.grid();
  std::size_t count = 0;
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    for (auto n : g.cell_corners(c)) {
      if (std::abs(v[n]) > threshold) {
        ++count;
        break;
      }
    }
  }
  return static_cast<double>(count) * g.cell_volume();
}

double support_ramp(double t) {
  if (t <= 0.9) return t;
  if (t >= 1.1) return 1.0;
  const double d = t - 0.9;
  return t - d * d / 0.4;
}

double support_ramp_slope(double t) {
  if (t <= 0.9) return 1.0;
  if (t >= 1.1) return 0.0;
  return 1.0 - (t - 0.9) / 0.2;
}

SmoothedMeasure smoothed_measure(const ScalarField& v, double delta) {
  if (!(delta > 0.0)) throw ContractError("smoothed_measure: delta must be > 0");
  const Grid& g = v.grid();
  SmoothedMeasure out;
  out.gradient.assign(g.node_count(), 0.0);
  const double w = g.cell_volume();
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    const auto corners = g.cell_corners(c);
    std::size_t arg = corners[0];
    for (auto n : corners) {
      if (std::abs(v[n]) > std::abs(v[arg])) arg = n;
    }
    const double a = std::abs(v[arg]);
    if (a == 0.0) continue;
    const double t = a / delta;
    out.value += support_ramp(t) * w;
    const double sign = v[arg] > 0.0 ? 1.0 : -1.0;
    out.gradient[arg] += support_ramp_slope(t) / delta * sign * w;
  }
  return out;
}

double penalty_value(double measure, const PenaltyConfig& cfg) {
  if (measure > cfg.omega0) return (measure - cfg.omega0) / cfg.epsilon;
  if (cfg.variant == PenaltyVariant::TwoSided) return -cfg.epsilon * (cfg.omega0 - measure);
  return 0.0;
}

double penalty_slope(double measure, const PenaltyConfig& cfg) {
  if (measure > cfg.omega0) return 1.0 / cfg.epsilon;
  if (cfg.variant == PenaltyVariant::TwoSided) return cfg.epsilon;
  return 0.0;
}

ObjectiveValue objective(const ScalarField& v, const PenaltyConfig& cfg, const SparseOperator& k,
                         const SparseOperator& m) {
  const auto x = to_dofs(k, v);
  const auto kx = buckle::apply(k, x);
  const auto mx = buckle::apply(m, x);
  const double vkv = dot(x, kx);
  const double vmv = dot(x, mx);
  if (!(vmv > 0.0)) throw ContractError("objective: zero field has no Rayleigh quotient");

  ObjectiveValue out;
  out.rayleigh = vkv / vmv;
  const SmoothedMeasure sm = smoothed_measure(v, cfg.delta);
  out.measure = sm.value;
  out.penalty = penalty_value(sm.value, cfg);
  out.total = out.rayleigh + out.penalty;

  const double slope = penalty_slope(sm.value, cfg);
  const auto d2n = k.dof_to_node();
  out.gradient.resize(x.size());
  for (std::size_t d = 0; d < x.size(); ++d) {
    out.gradient[d] = 2.0 * (kx[d] - out.rayleigh * mx[d]) / vmv + slope * sm.gradient[d2n[d]];
  }
  return out;
}

double epsilon1(double lambda, int dim, double omega0) {
  if (!(lambda > 0.0)) throw ContractError("epsilon1: lambda must be > 0");
  const double n = static_cast<double>(dim);
  const double a = 2.0 * lambda / (n * omega0);
  const double b = (std::pow(2.0, 2.0 / n) - 1.0) * lambda / omega0;
  return std::min(a, b);
}

double unit_ball_volume(int dim) {
  switch (dim) {
    case 1: return 2.0;
    case 2: return std::numbers::pi;
    case 3: return 4.0 * std::numbers::pi / 3.0;
    default: throw ContractError("unit_ball_volume: dim must be 1, 2 or 3");
  }
}

double unit_ball_buckling(int dim) {
  switch (dim) {
    case 1: return std::numbers::pi * std::numbers::pi;
    case 2: {
      const double j = bessel_j1_first_zero();
      return j * j;
    }
    default: throw ContractError("unit_ball_buckling: only dim 1 and 2 are supported");
  }
}

double lambda_max(int dim, double omega0) {
  if (!(omega0 > 0.0)) throw ContractError("lambda_max: omega0 must be > 0");
  return std::pow(unit_ball_volume(dim) / omega0, 2.0 / dim) * unit_ball_buckling(dim);
}

namespace {

double bessel_j1_series(double x) {
  const double half = 0.5 * x;
  double term = half;  // k = 0
  double sum = term;
  for (int k = 1; k < 60; ++k) {
    term *= -half * half / (static_cast<double>(k) * (k + 1));
    sum += term;
    if (std::abs(term) < 1e-18 * std::abs(sum)) break;
  }
  return sum;
}

}  // namespace

double bessel_j1_first_zero() {
  double lo = 3.0;  // J1(3) > 0
  double hi = 4.5;  // J1(4.5) < 0
  for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (bessel_j1_series(mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace buckle
