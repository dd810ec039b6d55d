#include "buckle/grid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "buckle/error.hpp"

namespace buckle {

Grid::Grid(int dim, std::vector<Interval> extent, std::vector<int> nodes_per_axis)
    : dim_(dim), extent_(std::move(extent)), nodes_(std::move(nodes_per_axis)) {
  if (dim_ == 3) throw ContractError("grid: dim=3 is reserved and not assembled by this build");
  if (dim_ < 1 || dim_ > 2) throw ContractError("grid: dim must be 1 or 2");
  if (static_cast<int>(extent_.size()) != dim_ || static_cast<int>(nodes_.size()) != dim_) {
    throw ContractError("grid: extent and node counts must have one entry per axis");
  }
  for (int a = 0; a < dim_; ++a) {
    if (!(extent_[a].hi > extent_[a].lo)) throw ContractError("grid: empty extent on an axis");
    if (nodes_[a] < 5) {
      std::ostringstream msg;
      msg << "grid: need at least 5 nodes per axis, got " << nodes_[a];
      throw ContractError(msg.str());
    }
  }
  h_ = extent_[0].length() / (nodes_[0] - 1);
  for (int a = 1; a < dim_; ++a) {
    const double ha = extent_[a].length() / (nodes_[a] - 1);
    if (std::abs(ha - h_) > 1e-12 * h_) {
      std::ostringstream msg;
      msg << "grid: non-uniform spacing (axis 0 h=" << h_ << ", axis " << a << " h=" << ha << ")";
      throw ContractError(msg.str());
    }
  }
  cell_volume_ = std::pow(h_, dim_);
  node_count_ = 1;
  cell_count_ = 1;
  for (int a = 0; a < kMaxDim; ++a) {
    node_stride_[a] = node_count_;
    cell_stride_[a] = cell_count_;
    if (a < dim_) {
      node_count_ *= static_cast<std::size_t>(nodes_[a]);
      cell_count_ *= static_cast<std::size_t>(nodes_[a] - 1);
    }
  }
}

double Grid::container_volume() const {
  double v = 1.0;
  for (const auto& e : extent_) v *= e.length();
  return v;
}

MultiIndex Grid::node_multi(std::size_t flat) const {
  MultiIndex m{0, 0, 0};
  for (int a = 0; a < dim_; ++a) {
    m[a] = static_cast<int>(flat % nodes_[a]);
    flat /= nodes_[a];
  }
  return m;
}

std::size_t Grid::node_flat(const MultiIndex& m) const {
  std::size_t f = 0;
  for (int a = 0; a < dim_; ++a) f += static_cast<std::size_t>(m[a]) * node_stride_[a];
  return f;
}

MultiIndex Grid::cell_multi(std::size_t flat) const {
  MultiIndex m{0, 0, 0};
  for (int a = 0; a < dim_; ++a) {
    m[a] = static_cast<int>(flat % (nodes_[a] - 1));
    flat /= (nodes_[a] - 1);
  }
  return m;
}

std::size_t Grid::cell_flat(const MultiIndex& m) const {
  std::size_t f = 0;
  for (int a = 0; a < dim_; ++a) f += static_cast<std::size_t>(m[a]) * cell_stride_[a];
  return f;
}

bool Grid::on_wall(std::size_t node) const {
  const MultiIndex m = node_multi(node);
  for (int a = 0; a < dim_; ++a) {
    if (m[a] == 0 || m[a] == nodes_[a] - 1) return true;
  }
  return false;
}

double Grid::node_weight_fraction(std::size_t node) const {
  const MultiIndex m = node_multi(node);
  double w = 1.0;
  for (int a = 0; a < dim_; ++a) {
    if (m[a] == 0 || m[a] == nodes_[a] - 1) w *= 0.5;
  }
  return w;
}

std::vector<std::size_t> Grid::cell_corners(std::size_t cell) const {
  const MultiIndex c = cell_multi(cell);
  std::vector<std::size_t> out;
  out.reserve(std::size_t{1} << dim_);
  for (int bits = 0; bits < (1 << dim_); ++bits) {
    MultiIndex n = c;
    for (int a = 0; a < dim_; ++a) n[a] += (bits >> a) & 1;
    out.push_back(node_flat(n));
  }
  return out;
}

std::vector<std::size_t> Grid::node_cells(std::size_t node) const {
  const MultiIndex n = node_multi(node);
  std::vector<std::size_t> out;
  for (int bits = 0; bits < (1 << dim_); ++bits) {
    MultiIndex c = n;
    bool ok = true;
    for (int a = 0; a < dim_; ++a) {
      c[a] -= (bits >> a) & 1;
      if (c[a] < 0 || c[a] >= nodes_[a] - 1) ok = false;
    }
    if (ok) out.push_back(cell_flat(c));
  }
  return out;
}

bool Grid::operator==(const Grid& other) const {
  return dim_ == other.dim_ && extent_ == other.extent_ && nodes_ == other.nodes_;
}

Grid make_grid(int dim, std::vector<Interval> extent, int nodes_per_axis) {
  if (dim < 1) throw ContractError("grid: dim must be 1 or 2");
  return Grid(dim, std::move(extent), std::vector<int>(static_cast<std::size_t>(dim), nodes_per_axis));
}

// ---------------------------------------------------------------------------

ScalarField::ScalarField(Grid grid) : grid_(std::move(grid)), values_(grid_.node_count(), 0.0) {}

ScalarField::ScalarField(Grid grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_.node_count()) {
    std::ostringstream msg;
    msg << "field: expected " << grid_.node_count() << " values, got " << values_.size();
    throw ContractError(msg.str());
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) throw ContractError("field: non-finite value");
    if (values_[i] != 0.0 && grid_.on_wall(i)) {
      throw ContractError("field: container wall node is not zero (clamped condition)");
    }
  }
}

ScalarField ScalarField::sample(const Grid& grid,
                                const std::function<double(std::span<const double>)>& f) {
  std::vector<double> vals(grid.node_count(), 0.0);
  std::array<double, kMaxDim> x{};
  for (std::size_t i = 0; i < vals.size(); ++i) {
    if (grid.on_wall(i)) continue;
    const MultiIndex m = grid.node_multi(i);
    for (int a = 0; a < grid.dim(); ++a) x[a] = grid.coord(a, m[a]);
    vals[i] = f(std::span<const double>(x.data(), static_cast<std::size_t>(grid.dim())));
  }
  return ScalarField(grid, std::move(vals));
}

double ScalarField::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

ScalarField ScalarField::scaled(double c) const {
  std::vector<double> vals(values_);
  for (double& v : vals) v *= c;
  return ScalarField(grid_, std::move(vals));
}

// ---------------------------------------------------------------------------

DomainMask::DomainMask(Grid grid) : grid_(std::move(grid)), active_(grid_.cell_count(), 0) {}

DomainMask::DomainMask(Grid grid, std::vector<std::uint8_t> active)
    : grid_(std::move(grid)), active_(std::move(active)) {
  if (active_.size() != grid_.cell_count()) {
    throw ContractError("mask: cell count does not match grid");
  }
  for (auto& a : active_) {
    a = a ? 1 : 0;
    count_ += a;
  }
}

DomainMask DomainMask::from_predicate(const Grid& grid,
                                      const std::function<bool(std::span<const double>)>& inside) {
  std::vector<std::uint8_t> act(grid.cell_count(), 0);
  std::array<double, kMaxDim> x{};
  for (std::size_t c = 0; c < act.size(); ++c) {
    const MultiIndex m = grid.cell_multi(c);
    for (int a = 0; a < grid.dim(); ++a) x[a] = grid.cell_center(a, m[a]);
    act[c] = inside(std::span<const double>(x.data(), static_cast<std::size_t>(grid.dim()))) ? 1 : 0;
  }
  return DomainMask(grid, std::move(act));
}

std::vector<std::uint8_t> DomainMask::interior_nodes() const {
  std::vector<std::uint8_t> out(grid_.node_count(), 0);
  const std::size_t full = std::size_t{1} << grid_.dim();
  for (std::size_t n = 0; n < out.size(); ++n) {
    if (grid_.on_wall(n)) continue;
    const auto cells = grid_.node_cells(n);
    if (cells.size() != full) continue;
    bool all = true;
    for (auto c : cells) all = all && active_[c];
    out[n] = all ? 1 : 0;
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<double> discrete_laplacian(const ScalarField& v) {
  const Grid& g = v.grid();
  const double inv_h2 = 1.0 / (g.h() * g.h());
  const auto vals = v.values();
  std::vector<double> out(vals.size(), 0.0);
  for (std::size_t i = 0; i < vals.size(); ++i) {
    const MultiIndex m = g.node_multi(i);
    double acc = 0.0;
    for (int a = 0; a < g.dim(); ++a) {
      const std::size_t s = g.node_stride(a);
      const bool lo = m[a] == 0;
      const bool hi = m[a] == g.nodes(a) - 1;
      const double minus = lo ? vals[i + s] : vals[i - s];
      const double plus = hi ? vals[i - s] : vals[i + s];
      acc += plus + minus - 2.0 * vals[i];
    }
    out[i] = acc * inv_h2;
  }
  return out;
}

std::vector<double> gradient_magnitude(const ScalarField& v) {
  const Grid& g = v.grid();
  const auto vals = v.values();
  std::vector<double> out(vals.size(), 0.0);
  for (std::size_t i = 0; i < vals.size(); ++i) {
    const MultiIndex m = g.node_multi(i);
    double sq = 0.0;
    for (int a = 0; a < g.dim(); ++a) {
      if (m[a] == 0 || m[a] == g.nodes(a) - 1) continue;  // mirrored ghost: zero normal slope
      const std::size_t s = g.node_stride(a);
      const double d = (vals[i + s] - vals[i - s]) / (2.0 * g.h());
      sq += d * d;
    }
    out[i] = std::sqrt(sq);
  }
  return out;
}

double grad_energy(const ScalarField& v) {
  const Grid& g = v.grid();
  const auto vals = v.values();
  double sum = 0.0;
  for (std::size_t i = 0; i < vals.size(); ++i) {
    if (g.on_wall(i)) continue;
    double sq = 0.0;
    for (int a = 0; a < g.dim(); ++a) {
      const std::size_t s = g.node_stride(a);
      const double d = (vals[i + s] - vals[i - s]) / (2.0 * g.h());
      sq += d * d;
    }
    sum += sq;
  }
  return sum * g.cell_volume();
}

double laplacian_energy(const ScalarField& v) {
  const Grid& g = v.grid();
  const auto lap = discrete_laplacian(v);
  double sum = 0.0;
  for (std::size_t i = 0; i < lap.size(); ++i) sum += g.node_weight_fraction(i) * lap[i] * lap[i];
  return sum * g.cell_volume();
}

}  // namespace buckle
