#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "bloomvmo/grid.hpp"
#include "bloomvmo/weights.hpp"

namespace bloomvmo {

struct CubeValue {
  DyadicCube cube;
  double value = 0.0;
};

/// Mean oscillation table and its supremum.
struct OscillationReport {
  std::vector<CubeValue> table;
  double bmo_norm = 0.0;
  DyadicCube argmax;
};

/// One point of a modulus curve. `empty` marks scales where no admissible cube
/// exists (value is then 0 and meaningless).
struct ScalePoint {
  int level = 0;
  double scale = 0.0;
  double value = 0.0;
  bool empty = false;
  DyadicCube argmax;
};

/// Discrete versions of the three VMO conditions.
///  small_scale: sup over cubes of side 2^-k, k from ceil(L/2) to L-1 (the
///               finest level is omitted: one-cell cubes have zero oscillation).
///  large_scale: the same for k from 0 to ceil(L/2)-1, coarsest first.
///  far_away:    for a = 2^-k, k = 0..L, sup over cubes disjoint from the cube
///               of side a centred at x0.
struct VmoModuli {
  std::vector<ScalePoint> small_scale;
  std::vector<ScalePoint> large_scale;
  std::vector<ScalePoint> far_away;
};

/// (1/nu(Q)) int_Q |b - <b>_Q|.
double mean_oscillation(const PrefixTable& b, const CellBox& q, const Weight& nu);
/// Unweighted version (1/|Q|) int_Q |b - <b>_Q|.
double mean_oscillation(const PrefixTable& b, const CellBox& q);

OscillationReport bmo_norm(const GridFunction& b, const Weight& nu, const LatticeSet& lattices);

using CubeFunctional = std::function<double(const CellBox&)>;

/// Modulus curves of an arbitrary per-cube functional.
VmoModuli moduli_curves(const LatticeSet& lattices, const CubeFunctional& functional,
                        std::array<double, 2> x0 = {0.5, 0.5});

VmoModuli vmo_moduli(const GridFunction& b, const Weight& nu, const LatticeSet& lattices,
                     std::array<double, 2> x0 = {0.5, 0.5});

enum class LpVariant {
  kLambda1Lambda2,        // (1/w1(Q) int_Q |b-<b>_Q|^p w2)^(1/p)
  kDualLambda1Lambda2,    // (1/w2'(Q) int_Q |b-<b>_Q|^p' w1')^(1/p'), wi' = wi^(-1/(p-1))
};

/// L^p / L^p' weighted oscillation of b on a cube; w1, w2 are the A_p weights.
double lp_oscillation(const PrefixTable& b, const CellBox& q, const Weight& w1, const Weight& w2, double p,
                      LpVariant variant);

VmoModuli vmo_moduli_lp(const GridFunction& b, const Weight& w1, const Weight& w2, double p, LpVariant variant,
                        const LatticeSet& lattices, std::array<double, 2> x0 = {0.5, 0.5});

/// Median value of b over a cell set: the smallest attained value m with
/// |{b > m}| <= |E|/2 and |{b < m}| <= |E|/2.
double median_value(const GridFunction& b, std::span<const std::size_t> cells);

/// Weight nu = (w1/w2)^(1/p) attached to A_p weights w1, w2.
Weight vmo_nu(const Weight& w1, const Weight& w2, double p);

/// Square box of side `side` (in [0,1] units) centred at x0, clipped to the grid.
CellBox centred_box(const Grid& g, std::array<double, 2> x0, double side);

}  // namespace bloomvmo
