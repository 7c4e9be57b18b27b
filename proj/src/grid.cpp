#include "bloomvmo/grid.hpp"

#include <cmath>
#include <sstream>

#include "bloomvmo/errors.hpp"

namespace bloomvmo {

namespace {

Index floor_div(Index a, Index b) {
  Index q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

Index positive_mod(Index a, Index m) { return ((a % m) + m) % m; }

}  // namespace

Grid::Grid(int dim, int depth) : dim_(dim), depth_(depth) {
  if (dim != 1 && dim != 2) throw PreconditionError("grid dimension must be 1 or 2");
  if (depth < 0 || depth * dim > 24) throw PreconditionError("grid depth out of range (n*L <= 24)");
}

std::size_t Grid::cell_count() const { return std::size_t{1} << (dim_ * depth_); }
double Grid::cell_side() const { return std::ldexp(1.0, -depth_); }
double Grid::cell_volume() const { return std::ldexp(1.0, -dim_ * depth_); }

Coord Grid::coords(std::size_t cell) const {
  const auto i = static_cast<Index>(cell);
  if (dim_ == 1) return {i, 0};
  return {i % per_axis(), i / per_axis()};
}

std::array<double, 2> Grid::midpoint(std::size_t cell) const {
  const Coord c = coords(cell);
  const double h = cell_side();
  return {(static_cast<double>(c[0]) + 0.5) * h, dim_ == 2 ? (static_cast<double>(c[1]) + 0.5) * h : 0.0};
}

bool CellBox::inside(const Grid& g) const {
  const Index n = g.per_axis();
  if (lo[0] < 0 || hi[0] > n || lo[0] >= hi[0]) return false;
  if (g.dim() == 1) return lo[1] == 0 && hi[1] == 1;
  return lo[1] >= 0 && hi[1] <= n && lo[1] < hi[1];
}

double CellBox::measure(const Grid& g) const {
  return static_cast<double>(cell_count()) * g.cell_volume();
}

std::string to_string(const DyadicCube& q) {
  std::ostringstream os;
  os << "cube(shift=" << q.shift_id << ", level=" << q.level << ", index=[" << q.index[0];
  os << ", " << q.index[1] << "])";
  return os.str();
}

std::vector<std::size_t> cells_of(const Grid& g, const CellBox& box) {
  std::vector<std::size_t> out;
  out.reserve(box.cell_count());
  for_each_cell(g, box, [&](std::size_t c) { out.push_back(c); });
  return out;
}

// ---------------------------------------------------------------------------

Lattice::Lattice(Grid grid, int shift_id) : grid_(grid), shift_id_(shift_id) {
  if (shift_id < 0 || shift_id >= shift_count(grid.dim())) throw PreconditionError("shift id out of range");
  const int digits[2] = {shift_id % 3, shift_id / 3};
  offsets_.resize(static_cast<std::size_t>(grid.depth()) + 1);
  for (int k = 0; k <= grid.depth(); ++k) {
    const Index side = Index{1} << (grid.depth() - k);
    for (int d = 0; d < 2; ++d) {
      const int t = d < grid.dim() ? digits[d] : 0;
      // nearest integer to (-1)^k * (t/3) * side
      const Index num = (k % 2 == 0 ? 1 : -1) * t * side;
      const auto raw = static_cast<Index>(std::llround(static_cast<double>(num) / 3.0));
      offsets_[k][d] = positive_mod(raw, side);
    }
  }
}

Index Lattice::extent(int level, int axis) const {
  if (axis >= grid_.dim()) return 1;
  const Index side = Index{1} << (grid_.depth() - level);
  const Index room = grid_.per_axis() - offsets_[level][axis];
  return room < side ? 0 : room / side;
}

std::size_t Lattice::cubes_at_level(int level) const {
  return static_cast<std::size_t>(extent(level, 0) * extent(level, 1));
}

bool Lattice::is_member(const DyadicCube& q) const {
  if (q.shift_id != shift_id_ || q.level < 0 || q.level > grid_.depth()) return false;
  for (int d = 0; d < 2; ++d) {
    if (d >= grid_.dim()) {
      if (q.index[d] != 0) return false;
      continue;
    }
    if (q.index[d] < 0 || q.index[d] >= extent(q.level, d)) return false;
  }
  return true;
}

CellBox Lattice::raw_box(int level, const Coord& index) const {
  const Index side = Index{1} << (grid_.depth() - level);
  CellBox b;
  for (int d = 0; d < grid_.dim(); ++d) {
    b.lo[d] = index[d] * side + offsets_[level][d];
    b.hi[d] = b.lo[d] + side;
  }
  return b;
}

CellBox Lattice::box(const DyadicCube& q) const {
  if (!is_member(q)) throw DomainError(to_string(q) + " is not a cube of the lattice inside the domain");
  return raw_box(q.level, q.index);
}

bool Lattice::cube_containing(const Coord& cell, int level, DyadicCube& out) const {
  if (level < 0 || level > grid_.depth()) return false;
  const Index side = Index{1} << (grid_.depth() - level);
  DyadicCube q{shift_id_, level, {0, 0}};
  for (int d = 0; d < grid_.dim(); ++d) q.index[d] = floor_div(cell[d] - offsets_[level][d], side);
  if (!is_member(q)) return false;
  out = q;
  return true;
}

bool Lattice::parent(const DyadicCube& q, DyadicCube& out) const {
  if (q.level == 0) return false;
  const CellBox b = raw_box(q.level, q.index);
  return cube_containing(b.lo, q.level - 1, out);
}

std::vector<DyadicCube> Lattice::children(const DyadicCube& q) const {
  std::vector<DyadicCube> out;
  if (q.level >= grid_.depth()) return out;
  const CellBox b = box(q);
  const Index half = b.side() / 2;
  const int ny = grid_.dim() == 2 ? 2 : 1;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < 2; ++i) {
      DyadicCube c;
      const Coord corner{b.lo[0] + i * half, b.lo[1] + j * half};
      if (cube_containing(corner, q.level + 1, c)) out.push_back(c);
    }
  }
  return out;
}

std::vector<DyadicCube> Lattice::roots() const {
  std::vector<DyadicCube> out;
  for_each_cube(*this, {}, [&](const DyadicCube& q, const CellBox&) {
    DyadicCube p;
    if (!parent(q, p)) out.push_back(q);
  });
  return out;
}

bool Lattice::cube_for_box(const CellBox& b, DyadicCube& out) const {
  const Index side = b.side();
  if (side <= 0 || (side & (side - 1)) != 0) return false;
  if (grid_.dim() == 2 && b.hi[1] - b.lo[1] != side) return false;
  int level = grid_.depth();
  while ((Index{1} << (grid_.depth() - level)) < side) --level;
  if (level < 0) return false;
  DyadicCube q;
  if (!cube_containing(b.lo, level, q)) return false;
  if (!(raw_box(level, q.index) == b)) return false;
  out = q;
  return true;
}

CellBox box_of(const Grid& g, const DyadicCube& q) { return Lattice(g, q.shift_id).box(q); }

// ---------------------------------------------------------------------------

LatticeSet LatticeSet::standard(const Grid& g) { return LatticeSet(g, {Lattice(g, 0)}); }

LatticeSet LatticeSet::all_shifts(const Grid& g) {
  std::vector<Lattice> l;
  for (int s = 0; s < Lattice::shift_count(g.dim()); ++s) l.emplace_back(g, s);
  return LatticeSet(g, std::move(l));
}

LatticeSet LatticeSet::from_ids(const Grid& g, std::span<const int> ids) {
  std::vector<Lattice> l;
  for (int s : ids) l.emplace_back(g, s);
  if (l.empty()) throw PreconditionError("empty lattice set");
  return LatticeSet(g, std::move(l));
}

CubeFilter CubeFilter::side_below(const Grid& g, double side) {
  CubeFilter f;
  const double h = g.cell_side();
  f.accept = [h, side](const CellBox& b) { return static_cast<double>(b.side()) * h < side; };
  return f;
}

CubeFilter CubeFilter::disjoint_from(const CellBox& box) {
  CubeFilter f;
  f.accept = [box](const CellBox& b) { return b.disjoint(box); };
  return f;
}

CubeFilter CubeFilter::contained_in(const CellBox& box) {
  CubeFilter f;
  f.accept = [box](const CellBox& b) { return box.contains(b); };
  return f;
}

void for_each_cube(const Lattice& lat, const CubeFilter& filter,
                   const std::function<void(const DyadicCube&, const CellBox&)>& visit) {
  const int L = lat.grid().depth();
  const int top = filter.max_level < 0 ? L : std::min(filter.max_level, L);
  for (int k = std::max(filter.min_level, 0); k <= top; ++k) {
    const Index e0 = lat.extent(k, 0);
    const Index e1 = lat.extent(k, 1);
    for (Index i = 0; i < e0; ++i) {
      for (Index j = 0; j < e1; ++j) {
        const DyadicCube q{lat.shift_id(), k, {i, j}};
        const CellBox b = lat.raw_box(k, q.index);
        if (filter.accept && !filter.accept(b)) continue;
        visit(q, b);
      }
    }
  }
}

std::vector<DyadicCube> enumerate_cubes(const Lattice& lat, const CubeFilter& filter) {
  std::vector<DyadicCube> out;
  for_each_cube(lat, filter, [&](const DyadicCube& q, const CellBox&) { out.push_back(q); });
  return out;
}

// ---------------------------------------------------------------------------

GridFunction::GridFunction(Grid grid, std::vector<double> values, std::string role)
    : grid_(grid), values_(std::move(values)), role_(std::move(role)) {
  if (values_.size() != grid_.cell_count()) throw PreconditionError("grid function size does not match grid");
  for (double v : values_) {
    if (!std::isfinite(v)) throw InvariantViolation("grid function has a non-finite value");
  }
}

GridFunction GridFunction::constant(const Grid& g, double c, std::string role) {
  return GridFunction(g, std::vector<double>(g.cell_count(), c), std::move(role));
}

GridFunction GridFunction::from_fn(const Grid& g, const std::function<double(std::array<double, 2>)>& fn,
                                   std::string role) {
  std::vector<double> v(g.cell_count());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = fn(g.midpoint(i));
  return GridFunction(g, std::move(v), std::move(role));
}

GridFunction GridFunction::map(const std::function<double(double)>& fn) const {
  std::vector<double> v(values_.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = fn(values_[i]);
  return GridFunction(grid_, std::move(v), role_);
}

GridFunction GridFunction::abs() const {
  return map([](double x) { return std::abs(x); });
}

GridFunction GridFunction::times(const GridFunction& o) const {
  if (!(o.grid() == grid_)) throw PreconditionError("grid mismatch");
  std::vector<double> v(values_.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = values_[i] * o.values_[i];
  return GridFunction(grid_, std::move(v), role_);
}

GridFunction GridFunction::scaled(double c) const {
  return map([c](double x) { return c * x; });
}

PrefixTable::PrefixTable(GridFunction f) : f_(std::move(f)) {
  const Grid& g = f_.grid();
  const Index n = g.per_axis();
  if (g.dim() == 1) {
    sums_.assign(static_cast<std::size_t>(n) + 1, 0.0L);
    for (Index i = 0; i < n; ++i) sums_[i + 1] = sums_[i] + static_cast<long double>(f_[i]);
    return;
  }
  const auto w = static_cast<std::size_t>(n + 1);
  sums_.assign(w * w, 0.0L);
  for (Index y = 0; y < n; ++y) {
    long double row = 0.0L;
    for (Index x = 0; x < n; ++x) {
      row += static_cast<long double>(f_[g.linear({x, y})]);
      sums_[(y + 1) * w + (x + 1)] = sums_[y * w + (x + 1)] + row;
    }
  }
}

long double PrefixTable::cell_sum(const CellBox& b) const {
  const Grid& g = f_.grid();
  if (!b.inside(g)) throw DomainError("box outside the grid domain");
  if (g.dim() == 1) return sums_[b.hi[0]] - sums_[b.lo[0]];
  const auto w = static_cast<std::size_t>(g.per_axis() + 1);
  auto at = [&](Index x, Index y) { return sums_[static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)]; };
  return at(b.hi[0], b.hi[1]) - at(b.lo[0], b.hi[1]) - at(b.hi[0], b.lo[1]) + at(b.lo[0], b.lo[1]);
}

double PrefixTable::integral(const CellBox& b) const {
  return static_cast<double>(cell_sum(b) * static_cast<long double>(f_.grid().cell_volume()));
}

double PrefixTable::average(const CellBox& b) const {
  return static_cast<double>(cell_sum(b) / static_cast<long double>(b.cell_count()));
}

double cube_integral(const PrefixTable& f, const DyadicCube& q) {
  if (q.level > f.grid().depth()) throw DomainError("cube finer than the grid");
  return f.integral(box_of(f.grid(), q));
}

double cube_average(const PrefixTable& f, const DyadicCube& q) {
  if (q.level > f.grid().depth()) throw DomainError("cube finer than the grid");
  return f.average(box_of(f.grid(), q));
}

}  // namespace bloomvmo
