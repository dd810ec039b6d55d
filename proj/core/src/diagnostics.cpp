#include "buckle/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "buckle/error.hpp"

namespace buckle {
namespace {

Point node_point(const Grid& g, std::size_t n) {
  const MultiIndex m = g.node_multi(n);
  Point p{};
  for (int a = 0; a < g.dim(); ++a) p[a] = g.coord(a, m[a]);
  return p;
}

Point cell_point(const Grid& g, std::size_t c) {
  const MultiIndex m = g.cell_multi(c);
  Point p{};
  for (int a = 0; a < g.dim(); ++a) p[a] = g.cell_center(a, m[a]);
  return p;
}

double dist2(const Point& a, const Point& b, int dim) {
  double s = 0.0;
  for (int k = 0; k < dim; ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return s;
}

// Calls f(flat) for every node (cells when `cells` is set) whose position
// lies in the closed ball.
template <class F>
void for_ball(const Grid& g, const Point& c, double r, bool cells, F&& f) {
  const double off = cells ? 0.5 : 0.0;
  std::array<int, kMaxDim> lo{0, 0, 0};
  std::array<int, kMaxDim> hi{0, 0, 0};
  for (int a = 0; a < g.dim(); ++a) {
    const int count = cells ? g.cells(a) : g.nodes(a);
    const double base = g.extent()[a].lo;
    lo[a] = std::max(0, static_cast<int>(std::floor((c[a] - r - base) / g.h() - off)));
    hi[a] = std::min(count - 1, static_cast<int>(std::ceil((c[a] + r - base) / g.h() - off)));
  }
  const double r2 = r * r * (1.0 + 1e-12);
  MultiIndex m{0, 0, 0};
  for (m[1] = lo[1]; m[1] <= hi[1]; ++m[1]) {
    for (m[0] = lo[0]; m[0] <= hi[0]; ++m[0]) {
      Point p{};
      for (int a = 0; a < g.dim(); ++a) p[a] = g.extent()[a].lo + (m[a] + off) * g.h();
      if (dist2(p, c, g.dim()) <= r2) f(cells ? g.cell_flat(m) : g.node_flat(m));
    }
  }
}

bool ball_inside_container(const Grid& g, const Point& c, double r) {
  for (int a = 0; a < g.dim(); ++a) {
    if (c[a] - r < g.extent()[a].lo || c[a] + r > g.extent()[a].hi) return false;
  }
  return true;
}

// Face neighbours of a cell inside the container.
template <class F>
void for_face_neighbours(const Grid& g, std::size_t cell, F&& f) {
  const MultiIndex m = g.cell_multi(cell);
  for (int a = 0; a < g.dim(); ++a) {
    for (int off : {-1, 1}) {
      MultiIndex q = m;
      q[a] += off;
      if (q[a] < 0 || q[a] >= g.cells(a)) continue;
      f(g.cell_flat(q));
    }
  }
}

}  // namespace

DomainMask extract_support(const ScalarField& v, double threshold) {
  const Grid& g = v.grid();
  std::vector<std::uint8_t> act(g.cell_count(), 0);
  for (std::size_t c = 0; c < act.size(); ++c) {
    for (auto n : g.cell_corners(c)) {
      if (std::abs(v[n]) > threshold) {
        act[c] = 1;
        break;
      }
    }
  }
  return DomainMask(g, std::move(act));
}

int connected_components(const DomainMask& mask) {
  const Grid& g = mask.grid();
  std::vector<std::uint8_t> seen(g.cell_count(), 0);
  std::vector<std::size_t> stack;
  int count = 0;
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    if (!mask.active(c) || seen[c]) continue;
    ++count;
    seen[c] = 1;
    stack.push_back(c);
    while (!stack.empty()) {
      const std::size_t cur = stack.back();
      stack.pop_back();
      for_face_neighbours(g, cur, [&](std::size_t nb) {
        if (mask.active(nb) && !seen[nb]) {
          seen[nb] = 1;
          stack.push_back(nb);
        }
      });
    }
  }
  return count;
}

std::vector<std::size_t> boundary_cells(const DomainMask& mask) {
  const Grid& g = mask.grid();
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    if (!mask.active(c)) continue;
    bool edge = false;
    for_face_neighbours(g, c, [&](std::size_t nb) { edge = edge || !mask.active(nb); });
    if (edge) out.push_back(c);
  }
  return out;
}

std::size_t boundary_face_count(const DomainMask& mask) {
  const Grid& g = mask.grid();
  std::size_t faces = 0;
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    if (!mask.active(c)) continue;
    for_face_neighbours(g, c, [&](std::size_t nb) { faces += mask.active(nb) ? 0 : 1; });
  }
  return faces;
}

double boundary_slack(const DomainMask& mask) {
  return static_cast<double>(boundary_face_count(mask)) * mask.grid().cell_volume();
}

double boundary_fraction(const DomainMask& mask) {
  const Grid& g = mask.grid();
  return static_cast<double>(boundary_cells(mask).size()) * g.cell_volume() / g.container_volume();
}

std::vector<std::size_t> boundary_nodes(const DomainMask& mask, double reach) {
  const Grid& g = mask.grid();
  std::vector<std::size_t> out;
  for (std::size_t n = 0; n < g.node_count(); ++n) {
    if (g.on_wall(n)) continue;
    bool any_on = false;
    bool any_off = false;
    for (auto c : g.node_cells(n)) {
      (mask.active(c) ? any_on : any_off) = true;
    }
    if (any_on && any_off && ball_inside_container(g, node_point(g, n), reach)) out.push_back(n);
  }
  return out;
}

DensityEstimate density_estimate(const DomainMask& mask, std::span<const double> radii) {
  const Grid& g = mask.grid();
  for (double r : radii) {
    if (r < 2.0 * g.h() * (1.0 - 1e-12)) throw ContractError("density_estimate: radii must be >= 2h");
  }
  DensityEstimate out;
  const double rmax = radii.empty() ? 0.0 : *std::max_element(radii.begin(), radii.end());
  const auto points = boundary_nodes(mask, rmax);
  out.points = points.size();
  for (double r : radii) {
    double worst = 1.0;
    for (auto n : points) {
      std::size_t in = 0;
      std::size_t all = 0;
      for_ball(g, node_point(g, n), r, true, [&](std::size_t c) {
        ++all;
        in += mask.active(c) ? 1 : 0;
      });
      if (all > 0) worst = std::min(worst, static_cast<double>(in) / static_cast<double>(all));
    }
    out.per_radius.emplace_back(r, worst);
    out.c1 = std::min(out.c1, worst);
  }
  return out;
}

NondegeneracyEstimate nondegeneracy_estimate(const ScalarField& v, const DomainMask& mask,
                                             std::span<const double> radii) {
  const Grid& g = v.grid();
  if (!(mask.grid() == g)) throw ContractError("nondegeneracy_estimate: grid mismatch");
  for (double r : radii) {
    if (!(r > 0.0 && r <= 0.25)) throw ContractError("nondegeneracy_estimate: radii must lie in (0, 0.25]");
  }
  const auto grad = gradient_magnitude(v);
  NondegeneracyEstimate out;
  out.c0 = std::numeric_limits<double>::infinity();
  const double rmax = radii.empty() ? 0.0 : *std::max_element(radii.begin(), radii.end());
  const auto points = boundary_nodes(mask, rmax);
  out.points = points.size();
  for (double r : radii) {
    double worst = std::numeric_limits<double>::infinity();
    for (auto n : points) {
      double sup = 0.0;
      for_ball(g, node_point(g, n), r, false, [&](std::size_t k) { sup = std::max(sup, grad[k]); });
      worst = std::min(worst, sup / r);
    }
    out.per_radius.emplace_back(r, worst);
    out.c0 = std::min(out.c0, worst);
  }
  if (points.empty()) out.c0 = 0.0;
  return out;
}

double angle_bound(double c1, int dim) {
  if (dim == 2) return 2.0 * std::numbers::pi * c1;
  if (dim == 3) return 2.0 * std::acos(1.0 - 2.0 * c1);
  throw ContractError("angle_bound: dim must be 2 or 3");
}

ScalarField u_field(const ScalarField& v, double lambda) {
  auto lap = discrete_laplacian(v);
  const Grid& g = v.grid();
  // Walls carry the clamped zero; the field type requires it.
  for (std::size_t i = 0; i < lap.size(); ++i) lap[i] = g.on_wall(i) ? 0.0 : lap[i] + lambda * v[i];
  return ScalarField(g, std::move(lap));
}

std::size_t BoundaryLabeling::count(BoundaryLabel l) const {
  return static_cast<std::size_t>(std::count(label.begin(), label.end(), l));
}

BoundaryLabeling label_boundary(const ScalarField& v, const DomainMask& mask) {
  const Grid& g = v.grid();
  const auto vals = v.values();
  double d2 = 0.0;
  for (std::size_t i = 0; i < vals.size(); ++i) {
    if (g.on_wall(i)) continue;
    const MultiIndex m = g.node_multi(i);
    for (int a = 0; a < g.dim(); ++a) {
      const std::size_t s = g.node_stride(a);
      d2 = std::max(d2, std::abs(vals[i + s] - 2.0 * vals[i] + vals[i - s]));
      for (int b = a + 1; b < g.dim(); ++b) {
        if (m[b] == 0 || m[b] == g.nodes(b) - 1) continue;
        const std::size_t t = g.node_stride(b);
        d2 = std::max(d2, std::abs(vals[i + s + t] - vals[i + s - t] - vals[i - s + t] + vals[i - s - t]) / 4.0);
      }
    }
  }
  d2 /= g.h() * g.h();

  BoundaryLabeling out;
  out.grad_threshold = g.h() * d2;
  out.boundary_cells = boundary_cells(mask);
  const auto grad = gradient_magnitude(v);
  for (auto c : out.boundary_cells) {
    double gmax = 0.0;
    for (auto n : g.cell_corners(c)) gmax = std::max(gmax, grad[n]);
    out.label.push_back(gmax > out.grad_threshold ? BoundaryLabel::Gamma1 : BoundaryLabel::Gamma0);
  }
  return out;
}

PhaseVolumes phase_volumes(const ScalarField& v, double threshold) {
  const Grid& g = v.grid();
  PhaseVolumes out;
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    bool pos = false;
    bool neg = false;
    for (auto n : g.cell_corners(c)) {
      pos = pos || v[n] > threshold;
      neg = neg || v[n] < -threshold;
    }
    out.positive += pos ? g.cell_volume() : 0.0;
    out.negative += neg ? g.cell_volume() : 0.0;
  }
  return out;
}

PassRate meanvalue_test(const ScalarField& U, const ScalarField& v, std::span<const Point> points,
                        std::span<const double> radii, double tol) {
  const Grid& g = v.grid();
  if (!(U.grid() == g)) throw ContractError("meanvalue_test: grid mismatch");
  std::vector<double> ladder(radii.begin(), radii.end());
  std::sort(ladder.begin(), ladder.end());
  PassRate out;
  for (const Point& p : points) {
    // Sign of the phase at the nearest node.
    double best = std::numeric_limits<double>::infinity();
    double sign = 0.0;
    for_ball(g, p, g.h(), false, [&](std::size_t n) {
      const double d = dist2(node_point(g, n), p, g.dim());
      if (d < best) {
        best = d;
        sign = v[n] > 0.0 ? 1.0 : (v[n] < 0.0 ? -1.0 : 0.0);
      }
    });
    if (sign == 0.0) continue;
    std::vector<double> w;
    for (double r : ladder) {
      double sum = 0.0;
      std::size_t count = 0;
      for_ball(g, p, r, false, [&](std::size_t n) {
        ++count;
        if (sign * v[n] > 0.0) sum += U[n];
      });
      w.push_back(count ? sum / static_cast<double>(count) : 0.0);
    }
    for (std::size_t k = 0; k + 1 < w.size(); ++k) {
      ++out.tested;
      const bool ok = sign > 0.0 ? w[k] >= w[k + 1] - tol : w[k] <= w[k + 1] + tol;
      out.passed += ok ? 1 : 0;
    }
  }
  return out;
}

PassRate boundary_sign_check(const ScalarField& U, const ScalarField& v, const DomainMask& mask,
                             double tol) {
  const Grid& g = v.grid();
  PassRate out;
  for (auto c : boundary_cells(mask)) {
    const Point p = cell_point(g, c);
    bool pos = false;
    bool neg = false;
    for_ball(g, p, 2.0 * g.h(), false, [&](std::size_t n) {
      pos = pos || v[n] > 0.0;
      neg = neg || v[n] < 0.0;
    });
    if (pos && neg) {
      ++out.excluded;
      continue;
    }
    if (!pos && !neg) continue;
    const double sign = pos ? 1.0 : -1.0;
    double sum = 0.0;
    std::size_t count = 0;
    for_ball(g, p, 2.0 * g.h(), false, [&](std::size_t n) {
      if (sign * v[n] > 0.0) {
        sum += U[n];
        ++count;
      }
    });
    ++out.tested;
    const double avg = sum / static_cast<double>(count);
    out.passed += (sign > 0.0 ? avg > -tol : avg < tol) ? 1 : 0;
  }
  return out;
}

PassRate first_variation_check(const ScalarField& U, const ScalarField& v,
                               std::span<const Bump> bumps, double tol_rel) {
  const Grid& g = v.grid();
  const double umax = U.max_abs();
  const double inv_h2 = 1.0 / (g.h() * g.h());
  PassRate out;
  for (const Bump& b : bumps) {
    auto phi = [&](const Point& x) {
      const double s = 1.0 - dist2(x, b.center, g.dim()) / (b.radius * b.radius);
      return s > 0.0 ? s * s * s : 0.0;
    };
    double sign = 0.0;
    {
      double best = std::numeric_limits<double>::infinity();
      for_ball(g, b.center, g.h(), false, [&](std::size_t n) {
        const double d = dist2(node_point(g, n), b.center, g.dim());
        if (d < best) {
          best = d;
          sign = v[n] > 0.0 ? 1.0 : (v[n] < 0.0 ? -1.0 : 0.0);
        }
      });
    }
    if (sign == 0.0) continue;
    double integral = 0.0;
    double l1 = 0.0;
    for_ball(g, b.center, b.radius + g.h(), false, [&](std::size_t n) {
      if (g.on_wall(n)) return;
      const Point x = node_point(g, n);
      double lap = -2.0 * g.dim() * phi(x);
      for (int a = 0; a < g.dim(); ++a) {
        Point y = x;
        y[a] += g.h();
        lap += phi(y);
        y[a] -= 2.0 * g.h();
        lap += phi(y);
      }
      lap *= inv_h2;
      l1 += std::abs(lap);
      if (sign * v[n] > 0.0) integral += U[n] * lap;
    });
    integral *= g.cell_volume();
    l1 *= g.cell_volume();
    const double tol = tol_rel * umax * l1;
    ++out.tested;
    out.passed += (sign > 0.0 ? integral <= tol : integral >= -tol) ? 1 : 0;
  }
  return out;
}

std::vector<Point> near_boundary_points(const ScalarField& v, double threshold, double reach,
                                        int sign, std::size_t stride) {
  const Grid& g = v.grid();
  std::vector<Point> out;
  std::size_t seen = 0;
  for (std::size_t n = 0; n < g.node_count(); ++n) {
    if (!(sign * v[n] > threshold)) continue;
    const Point p = node_point(g, n);
    if (!ball_inside_container(g, p, reach)) continue;
    bool near = false;
    for_ball(g, p, reach, false, [&](std::size_t k) { near = near || v[k] == 0.0; });
    if (!near) continue;
    if (seen++ % std::max<std::size_t>(stride, 1) == 0) out.push_back(p);
  }
  return out;
}

std::vector<Bump> random_boundary_bumps(const ScalarField& v, double threshold, std::size_t count,
                                        std::uint64_t seed) {
  const Grid& g = v.grid();
  const double h = g.h();
  const auto candidates = near_boundary_points(v, threshold, 8.0 * h, +1);
  std::vector<Bump> out;
  if (candidates.empty()) return out;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
  std::uniform_real_distribution<double> rad(4.0 * h, 8.0 * h);
  for (std::size_t tries = 0; out.size() < count && tries < 100 * count; ++tries) {
    const Point c = candidates[pick(rng)];
    const double r = rad(rng);
    bool touches_zero = false;
    for_ball(g, c, r, false, [&](std::size_t k) { touches_zero = touches_zero || v[k] == 0.0; });
    if (touches_zero) out.push_back({c, r});
  }
  return out;
}

DiagnosticsReport diagnose(const ScalarField& v, double lambda, const DiagnosticsOptions& opts) {
  const Grid& g = v.grid();
  const double h = g.h();
  const double thr = opts.support_rel * v.max_abs();
  const DomainMask mask = extract_support(v, thr);

  DiagnosticsReport r;
  r.lambda = lambda;
  r.volume = mask.volume();
  r.slack = boundary_slack(mask);
  r.components = connected_components(mask);
  r.boundary_fraction_by_level.emplace_back(h, boundary_fraction(mask));

  r.density = density_estimate(mask, opts.radii);
  r.c1_estimate = r.density.c1;
  r.nondegeneracy = nondegeneracy_estimate(v, mask, opts.radii);
  r.c0_estimate = r.nondegeneracy.c0;
  if (g.dim() >= 2) r.min_angle_bound = angle_bound(r.c1_estimate, g.dim());

  const ScalarField U = u_field(v, lambda);
  const double tol = opts.meanvalue_tol_rel * U.max_abs();
  const std::vector<double> ladder{2.0 * h, 4.0 * h, 8.0 * h};
  auto points = near_boundary_points(v, thr, 8.0 * h, +1);
  const auto negative = near_boundary_points(v, thr, 8.0 * h, -1);
  points.insert(points.end(), negative.begin(), negative.end());
  r.meanvalue = meanvalue_test(U, v, points, ladder, tol);
  r.meanvalue_pass_rate = r.meanvalue.rate();

  r.sign_check = boundary_sign_check(U, v, mask, tol);
  r.sign_check_pass_rate = r.sign_check.rate();
  r.branch_cells = r.sign_check.excluded;

  const auto bumps = random_boundary_bumps(v, thr, opts.bumps, opts.seed);
  r.first_variation = first_variation_check(U, v, bumps, opts.first_variation_tol_rel);
  r.first_variation_pass_rate = r.first_variation.rate();

  r.phase_volumes = phase_volumes(v, thr);
  const BoundaryLabeling lab = label_boundary(v, mask);
  r.gamma0_cells = lab.count(BoundaryLabel::Gamma0);
  r.gamma1_cells = lab.count(BoundaryLabel::Gamma1);

  r.wall_distance = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    if (!mask.active(c)) continue;
    const Point p = cell_point(g, c);
    for (int a = 0; a < g.dim(); ++a) {
      r.wall_distance = std::min({r.wall_distance, p[a] - g.extent()[a].lo, g.extent()[a].hi - p[a]});
    }
  }
  if (mask.empty()) r.wall_distance = 0.0;
  return r;
}

}  // namespace buckle
