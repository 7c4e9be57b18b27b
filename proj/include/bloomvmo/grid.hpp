#pragma once

// Dyadic grids on the unit cube [0,1)^n, n in {1,2}.
//
// Everything is measured in finest-cell units: a grid of depth L has 2^L cells
// per axis, and every cube of every lattice is a union of whole cells, so
// integrals of grid functions over cubes are exact finite sums.

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace bloomvmo {

using Index = std::int64_t;
using Coord = std::array<Index, 2>;

class Grid {
 public:
  Grid(int dim, int depth);

  int dim() const { return dim_; }
  int depth() const { return depth_; }
  Index per_axis() const { return Index{1} << depth_; }
  std::size_t cell_count() const;
  double cell_side() const;
  double cell_volume() const;

  /// Row-major: the first axis varies fastest.
  std::size_t linear(const Coord& c) const {
    return static_cast<std::size_t>(c[0] + (dim_ == 2 ? c[1] * per_axis() : 0));
  }
  Coord coords(std::size_t cell) const;
  /// Midpoint of a cell in [0,1)^n coordinates.
  std::array<double, 2> midpoint(std::size_t cell) const;

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  int dim_;
  int depth_;
};

/// Half-open box [lo, hi) in cell units. For n = 1 the second axis is [0,1).
struct CellBox {
  Coord lo{0, 0};
  Coord hi{1, 1};

  Index side() const { return hi[0] - lo[0]; }
  std::size_t cell_count() const {
    return static_cast<std::size_t>((hi[0] - lo[0]) * (hi[1] - lo[1]));
  }
  bool contains(const CellBox& o) const {
    return lo[0] <= o.lo[0] && o.hi[0] <= hi[0] && lo[1] <= o.lo[1] && o.hi[1] <= hi[1];
  }
  bool contains_cell(const Coord& c) const {
    return lo[0] <= c[0] && c[0] < hi[0] && lo[1] <= c[1] && c[1] < hi[1];
  }
  bool disjoint(const CellBox& o) const {
    return hi[0] <= o.lo[0] || o.hi[0] <= lo[0] || hi[1] <= o.lo[1] || o.hi[1] <= lo[1];
  }
  bool inside(const Grid& g) const;
  double measure(const Grid& g) const;

  friend bool operator==(const CellBox&, const CellBox&) = default;
};

/// Cube of a shifted dyadic lattice. shift_id encodes t in {0,1/3,2/3}^n as
/// base-3 digits (first axis least significant); side = 2^-level.
struct DyadicCube {
  int shift_id = 0;
  int level = 0;
  Coord index{0, 0};

  friend bool operator==(const DyadicCube&, const DyadicCube&) = default;
  friend auto operator<=>(const DyadicCube&, const DyadicCube&) = default;
};

std::string to_string(const DyadicCube& q);

/// Visits every cell of a box in row-major order.
template <class Fn>
void for_each_cell(const Grid& g, const CellBox& box, Fn&& fn) {
  const Index stride = g.per_axis();
  for (Index y = box.lo[1]; y < box.hi[1]; ++y) {
    const std::size_t row = static_cast<std::size_t>(g.dim() == 2 ? y * stride : 0);
    for (Index x = box.lo[0]; x < box.hi[0]; ++x) fn(row + static_cast<std::size_t>(x));
  }
}

std::vector<std::size_t> cells_of(const Grid& g, const CellBox& box);

/// One of the 3^n shifted dyadic lattices restricted to [0,1)^n.
///
/// Level-k cubes have origin index*2^(L-k) + offset_k per axis, where offset_k
/// is the nearest cell to (-1)^k t 2^(L-k) reduced modulo the side. The rounded
/// offsets keep every level-(k+1) cube nested in a level-k cube. Cubes that
/// would leave the domain are not members.
class Lattice {
 public:
  Lattice(Grid grid, int shift_id);

  const Grid& grid() const { return grid_; }
  int shift_id() const { return shift_id_; }
  static int shift_count(int dim) { return dim == 1 ? 3 : 9; }

  Index offset(int level, int axis) const { return offsets_[level][axis]; }
  /// Number of member cubes along an axis at a level.
  Index extent(int level, int axis) const;
  std::size_t cubes_at_level(int level) const;

  bool is_member(const DyadicCube& q) const;
  /// Throws DomainError if q is not a member.
  CellBox box(const DyadicCube& q) const;
  /// Unchecked geometry (valid for any index).
  CellBox raw_box(int level, const Coord& index) const;

  bool cube_containing(const Coord& cell, int level, DyadicCube& out) const;
  bool parent(const DyadicCube& q, DyadicCube& out) const;
  std::vector<DyadicCube> children(const DyadicCube& q) const;
  /// Members whose parent is not a member (the tops of the lattice).
  std::vector<DyadicCube> roots() const;

  /// Finds the member cube with exactly this box, if any.
  bool cube_for_box(const CellBox& box, DyadicCube& out) const;

 private:
  Grid grid_;
  int shift_id_;
  std::vector<std::array<Index, 2>> offsets_;
};

/// Geometry of a cube from any lattice, computed from its shift id.
CellBox box_of(const Grid& g, const DyadicCube& q);

/// A set of lattices over which suprema are taken.
class LatticeSet {
 public:
  static LatticeSet standard(const Grid& g);
  static LatticeSet all_shifts(const Grid& g);
  static LatticeSet from_ids(const Grid& g, std::span<const int> ids);

  const Grid& grid() const { return grid_; }
  const std::vector<Lattice>& lattices() const { return lattices_; }
  auto begin() const { return lattices_.begin(); }
  auto end() const { return lattices_.end(); }
  std::size_t size() const { return lattices_.size(); }

 private:
  LatticeSet(Grid g, std::vector<Lattice> l) : grid_(g), lattices_(std::move(l)) {}
  Grid grid_;
  std::vector<Lattice> lattices_;
};

/// Scale/position filter for cube enumeration. max_level < 0 means L.
struct CubeFilter {
  int min_level = 0;
  int max_level = -1;
  std::function<bool(const CellBox&)> accept;

  static CubeFilter side_below(const Grid& g, double side);
  static CubeFilter disjoint_from(const CellBox& box);
  static CubeFilter contained_in(const CellBox& box);
};

/// Member cubes passing the filter, level-major then index-lexicographic.
std::vector<DyadicCube> enumerate_cubes(const Lattice& lat, const CubeFilter& filter = {});
void for_each_cube(const Lattice& lat, const CubeFilter& filter,
                   const std::function<void(const DyadicCube&, const CellBox&)>& visit);

/// Piecewise-constant function: one finite value per finest cell.
class GridFunction {
 public:
  GridFunction(Grid grid, std::vector<double> values, std::string role = {});
  static GridFunction constant(const Grid& g, double c, std::string role = {});
  static GridFunction from_fn(const Grid& g, const std::function<double(std::array<double, 2>)>& fn,
                              std::string role = {});

  const Grid& grid() const { return grid_; }
  const std::vector<double>& values() const { return values_; }
  std::span<const double> span() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::size_t size() const { return values_.size(); }
  const std::string& role() const { return role_; }
  void set_role(std::string r) { role_ = std::move(r); }

  GridFunction map(const std::function<double(double)>& fn) const;
  GridFunction abs() const;
  GridFunction times(const GridFunction& o) const;
  GridFunction scaled(double c) const;

 private:
  Grid grid_;
  std::vector<double> values_;
  std::string role_;
};

/// Summed-area table for O(1) box integrals. Extended precision keeps the
/// differences of large prefix sums accurate.
class PrefixTable {
 public:
  explicit PrefixTable(GridFunction f);

  const GridFunction& function() const { return f_; }
  const Grid& grid() const { return f_.grid(); }
  /// Sum of cell values over the box (no volume factor).
  long double cell_sum(const CellBox& box) const;
  double integral(const CellBox& box) const;
  double average(const CellBox& box) const;

 private:
  GridFunction f_;
  std::vector<long double> sums_;
};

/// Exact integral of f over a cube; throws DomainError for non-member cubes.
double cube_integral(const PrefixTable& f, const DyadicCube& q);
double cube_average(const PrefixTable& f, const DyadicCube& q);

}  // namespace bloomvmo
