#pragma once

#include <cstdint>

#include "json.hpp"

#include "bloomvmo/grid.hpp"

namespace bloomvmo {

/// Symbol generators (the b of the commutators). Spec examples:
///   {"kind":"constant","c":1}
///   {"kind":"step","breakpoint":0.5,"low":0,"high":1}
///   {"kind":"bump","center":0.5,"radius":0.25,"amplitude":1}   exp(1 - 1/(1-r^2))
///   {"kind":"oscillator","amplitude":1}
///   {"kind":"polynomial","coeffs":[0,1,-1]}                      in the first coordinate
///   {"kind":"log","center":0.5}                                  log|x - c|, cell averaged in 1D
///   {"kind":"sine","frequency":3,"amplitude":1}
///   {"kind":"random","seed":7,"amplitude":1}                     uniform in [-a, a] per cell
///   {"kind":"indicator","lo":0.3125,"hi":0.328125}               [lo,hi)^n, by cell midpoint
GridFunction make_symbol(const Grid& g, const nlohmann::json& spec);

/// Smooth compactly supported bump with peak value `amplitude` at the center.
GridFunction bump_symbol(const Grid& g, std::array<double, 2> center, double radius, double amplitude = 1.0);

/// Non-VMO witness: on each cube P_k = [2^-k, 2^(1-k)) (diagonal squares in 2D),
/// k = 1..L-1, b is `amplitude` on the left half along the first axis and 0
/// elsewhere. Every P_k has unweighted mean oscillation amplitude/2.
GridFunction oscillator_symbol(const Grid& g, double amplitude = 1.0);

GridFunction random_symbol(const Grid& g, std::uint64_t seed, double amplitude = 1.0);

}  // namespace bloomvmo
