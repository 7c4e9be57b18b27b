#include "bloomvmo/oscillation.hpp"

#include <algorithm>
#include <cmath>

#include "bloomvmo/errors.hpp"

namespace bloomvmo {

double mean_oscillation(const PrefixTable& b, const CellBox& q) {
  const Grid& g = b.grid();
  const double avg = b.average(q);
  long double acc = 0.0L;
  const auto& v = b.function().values();
  for_each_cell(g, q, [&](std::size_t c) { acc += std::abs(v[c] - avg); });
  return static_cast<double>(acc / static_cast<long double>(q.cell_count()));
}

double mean_oscillation(const PrefixTable& b, const CellBox& q, const Weight& nu) {
  const double measure = q.measure(b.grid());
  return mean_oscillation(b, q) * measure / nu.integral(q);
}

OscillationReport bmo_norm(const GridFunction& b, const Weight& nu, const LatticeSet& lattices) {
  const PrefixTable tb(b);
  OscillationReport report;
  report.bmo_norm = -1.0;
  for (const Lattice& lat : lattices) {
    for_each_cube(lat, {}, [&](const DyadicCube& q, const CellBox& box) {
      const double v = mean_oscillation(tb, box, nu);
      report.table.push_back({q, v});
      if (v > report.bmo_norm) {
        report.bmo_norm = v;
        report.argmax = q;
      }
    });
  }
  return report;
}

CellBox centred_box(const Grid& g, std::array<double, 2> x0, double side) {
  const Index n = g.per_axis();
  CellBox b;
  for (int d = 0; d < g.dim(); ++d) {
    Index lo = static_cast<Index>(std::llround((x0[d] - side / 2.0) * static_cast<double>(n)));
    Index hi = static_cast<Index>(std::llround((x0[d] + side / 2.0) * static_cast<double>(n)));
    lo = std::clamp<Index>(lo, 0, n);
    hi = std::clamp<Index>(hi, 0, n);
    if (hi <= lo) {
      lo = std::clamp<Index>(static_cast<Index>(std::floor(x0[d] * static_cast<double>(n))), 0, n - 1);
      hi = lo + 1;
    }
    b.lo[d] = lo;
    b.hi[d] = hi;
  }
  return b;
}

VmoModuli moduli_curves(const LatticeSet& lattices, const CubeFunctional& functional, std::array<double, 2> x0) {
  const Grid& g = lattices.grid();
  const int L = g.depth();
  struct Entry {
    DyadicCube cube;
    CellBox box;
    double value;
  };
  std::vector<Entry> entries;
  for (const Lattice& lat : lattices) {
    for_each_cube(lat, {}, [&](const DyadicCube& q, const CellBox& b) { entries.push_back({q, b, functional(b)}); });
  }

  auto level_point = [&](int k) {
    ScalePoint pt{k, std::ldexp(1.0, -k), 0.0, true, {}};
    for (const Entry& e : entries) {
      if (e.cube.level != k) continue;
      if (pt.empty || e.value > pt.value) {
        pt.value = e.value;
        pt.argmax = e.cube;
        pt.empty = false;
      }
    }
    return pt;
  };

  VmoModuli m;
  const int split = (L + 1) / 2;
  for (int k = split; k <= L - 1; ++k) m.small_scale.push_back(level_point(k));
  for (int k = 0; k < split; ++k) m.large_scale.push_back(level_point(k));
  for (int k = 0; k <= L; ++k) {
    const double a = std::ldexp(1.0, -k);
    const CellBox central = centred_box(g, x0, a);
    ScalePoint pt{k, a, 0.0, true, {}};
    for (const Entry& e : entries) {
      if (!e.box.disjoint(central)) continue;
      if (pt.empty || e.value > pt.value) {
        pt.value = e.value;
        pt.argmax = e.cube;
        pt.empty = false;
      }
    }
    m.far_away.push_back(pt);
  }
  return m;
}

VmoModuli vmo_moduli(const GridFunction& b, const Weight& nu, const LatticeSet& lattices,
                     std::array<double, 2> x0) {
  const PrefixTable tb(b);
  return moduli_curves(lattices, [&](const CellBox& q) { return mean_oscillation(tb, q, nu); }, x0);
}

double lp_oscillation(const PrefixTable& b, const CellBox& q, const Weight& w1, const Weight& w2, double p,
                      LpVariant variant) {
  const Grid& g = b.grid();
  const double avg = b.average(q);
  const auto& v = b.function().values();
  long double acc = 0.0L;
  if (variant == LpVariant::kLambda1Lambda2) {
    for_each_cell(g, q, [&](std::size_t c) { acc += std::pow(std::abs(v[c] - avg), p) * w2[c]; });
    const double num = static_cast<double>(acc) * g.cell_volume();
    return std::pow(num / w1.integral(q), 1.0 / p);
  }
  const double pc = conjugate(p);
  const double s = -1.0 / (p - 1.0);
  for_each_cell(g, q, [&](std::size_t c) { acc += std::pow(std::abs(v[c] - avg), pc) * std::pow(w1[c], s); });
  const double num = static_cast<double>(acc) * g.cell_volume();
  return std::pow(num / w2.integral(q, s), 1.0 / pc);
}

VmoModuli vmo_moduli_lp(const GridFunction& b, const Weight& w1, const Weight& w2, double p, LpVariant variant,
                        const LatticeSet& lattices, std::array<double, 2> x0) {
  if (!(p > 1.0)) throw PreconditionError("p must exceed 1");
  const PrefixTable tb(b);
  return moduli_curves(lattices, [&](const CellBox& q) { return lp_oscillation(tb, q, w1, w2, p, variant); }, x0);
}

double median_value(const GridFunction& b, std::span<const std::size_t> cells) {
  if (cells.empty()) throw PreconditionError("median of an empty set");
  std::vector<double> v;
  v.reserve(cells.size());
  for (std::size_t c : cells) v.push_back(b[c]);
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && v[j] == v[i]) ++j;
    const std::size_t below = i;
    const std::size_t above = n - j;
    if (2 * below <= n && 2 * above <= n) return v[i];
    i = j;
  }
  throw InvariantViolation("no median found");
}

Weight vmo_nu(const Weight& w1, const Weight& w2, double p) {
  std::vector<double> v(w1.function().size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::pow(w1[i] / w2[i], 1.0 / p);
  return Weight(GridFunction(w1.grid(), std::move(v), "nu"));
}

}  // namespace bloomvmo
