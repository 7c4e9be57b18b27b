#include "bloomvmo/weights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bloomvmo/errors.hpp"

namespace bloomvmo {

Weight::Weight(GridFunction values) : values_(std::move(values)), cache_(std::make_shared<Cache>()) {
  for (double v : values_.values()) {
    if (!(v > 0.0) || !std::isfinite(v)) throw InvariantViolation("weight must be strictly positive and finite");
  }
}

const PrefixTable& Weight::power_table(double s) const {
  std::lock_guard<std::mutex> lock(cache_->mu);
  auto it = cache_->tables.find(s);
  if (it != cache_->tables.end()) return *it->second;
  GridFunction powered = s == 1.0 ? values_ : values_.map([s](double x) { return std::pow(x, s); });
  for (double v : powered.values()) {
    if (!std::isfinite(v)) throw InvariantViolation("weight power overflows");
  }
  auto [pos, _] = cache_->tables.emplace(s, std::make_unique<PrefixTable>(std::move(powered)));
  return *pos->second;
}

void Weight::warm(std::initializer_list<double> exponents) const {
  for (double s : exponents) power_table(s);
}

Weight Weight::pow(double s) const {
  return Weight(values_.map([s](double x) { return std::pow(x, s); }));
}

Weight Weight::scaled(double c) const {
  if (!(c > 0.0)) throw PreconditionError("weight scale must be positive");
  return Weight(values_.scaled(c));
}

// ---------------------------------------------------------------------------

BloomTriple::BloomTriple(double a, double p, double q, Weight l1, Weight l2, Weight nu)
    : alpha_(a), p_(p), q_(q), lambda1_(std::move(l1)), lambda2_(std::move(l2)), nu_(std::move(nu)) {
  lambda1_.warm({1.0, p_, -p_conj(), q_});
  lambda2_.warm({1.0, q_, -q_conj(), p_, -p_conj()});
  nu_.warm({1.0, -1.0});
}

BloomTriple BloomTriple::make(double alpha, double p, Weight lambda1, Weight lambda2) {
  const int n = lambda1.grid().dim();
  if (!(lambda1.grid() == lambda2.grid())) throw PreconditionError("weights live on different grids");
  if (!(alpha > 0.0 && alpha < n)) throw PreconditionError("alpha must lie in (0, n)");
  if (!(p > 1.0 && p < n / alpha)) throw PreconditionError("p must lie in (1, n/alpha)");
  const double q = 1.0 / (1.0 / p - alpha / n);
  Weight nu = bloom_quotient(lambda1, lambda2);
  return BloomTriple(alpha, p, q, std::move(lambda1), std::move(lambda2), std::move(nu));
}

BloomTriple BloomTriple::with_q(double alpha, double p, double q, Weight lambda1, Weight lambda2) {
  BloomTriple t = make(alpha, p, std::move(lambda1), std::move(lambda2));
  if (std::abs(1.0 / p - 1.0 / q - alpha / t.dim()) > 1e-12)
    throw PreconditionError("exponents violate 1/p - 1/q = alpha/n");
  return t;
}

// ---------------------------------------------------------------------------

namespace {

template <class Fn>
Characteristic sup_over_cubes(const LatticeSet& lattices, Fn&& value) {
  Characteristic best{-std::numeric_limits<double>::infinity(), {}};
  for (const Lattice& lat : lattices) {
    for_each_cube(lat, {}, [&](const DyadicCube& q, const CellBox& b) {
      const double v = value(b);
      if (v > best.value) best = {v, q};
    });
  }
  return best;
}

}  // namespace

Characteristic ap_characteristic(const Weight& w, double p, const LatticeSet& lattices) {
  if (!(p > 1.0)) throw PreconditionError("A_p needs p > 1");
  const double s = 1.0 - conjugate(p);
  const PrefixTable& t1 = w.power_table(1.0);
  const PrefixTable& ts = w.power_table(s);
  return sup_over_cubes(lattices, [&](const CellBox& b) { return t1.average(b) * std::pow(ts.average(b), p - 1.0); });
}

Characteristic apq_characteristic(const Weight& w, double p, double q, const LatticeSet& lattices) {
  if (!(p > 1.0 && p < q)) throw PreconditionError("A_{p,q} needs 1 < p < q");
  const double pc = conjugate(p);
  const PrefixTable& tq = w.power_table(q);
  const PrefixTable& tp = w.power_table(-pc);
  return sup_over_cubes(lattices, [&](const CellBox& b) { return tq.average(b) * std::pow(tp.average(b), q / pc); });
}

DoublingFit doubling_exponents(const Weight& w, double p, const LatticeSet& lattices) {
  constexpr int kSigmas = 20;
  std::array<double, kSigmas> c2{};
  c2.fill(0.0);
  DoublingFit fit;
  fit.c1 = std::numeric_limits<double>::infinity();
  const PrefixTable& t = w.power_table(1.0);
  const int n = w.grid().dim();
  for (const Lattice& lat : lattices) {
    for_each_cube(lat, {}, [&](const DyadicCube& e, const CellBox& eb) {
      const double we = t.integral(eb);
      DyadicCube b = e;
      CellBox bb = eb;
      while (true) {
        const double ratio = we / t.integral(bb);
        const double m = std::ldexp(1.0, -n * (e.level - b.level));
        fit.c1 = std::min(fit.c1, ratio / std::pow(m, p));
        for (int i = 0; i < kSigmas; ++i) c2[i] = std::max(c2[i], ratio / std::pow(m, 0.05 * (i + 1)));
        ++fit.pairs;
        DyadicCube up;
        if (!lat.parent(b, up)) break;
        b = up;
        bb = lat.box(b);
      }
    });
  }
  for (int i = kSigmas - 1; i >= 0; --i) {
    if (c2[i] <= 100.0) {
      fit.sigma = 0.05 * (i + 1);
      fit.c2 = c2[i];
      fit.admissible = true;
      return fit;
    }
  }
  fit.sigma = 0.0;
  fit.c2 = c2[0];
  return fit;
}

Weight bloom_quotient(const Weight& lambda1, const Weight& lambda2) {
  if (!(lambda1.grid() == lambda2.grid())) throw PreconditionError("weights live on different grids");
  std::vector<double> v(lambda1.function().size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (lambda2[i] < 1e-300) throw InvariantViolation("Bloom quotient divisor below 1e-300");
    v[i] = lambda1[i] / lambda2[i];
  }
  return Weight(GridFunction(lambda1.grid(), std::move(v), "nu"));
}

// ---------------------------------------------------------------------------

Weight constant_weight(const Grid& g, double c) {
  if (!(c > 0.0)) throw PreconditionError("constant weight must be positive");
  return Weight(GridFunction::constant(g, c, "weight"));
}

namespace {

// Cell average of |x - c|^a over [x0, x1).
double power_cell_average_1d(double x0, double x1, double c, double a) {
  auto antideriv = [&](double x) {
    const double d = x - c;
    return std::copysign(std::pow(std::abs(d), a + 1.0), d) / (a + 1.0);
  };
  return (antideriv(x1) - antideriv(x0)) / (x1 - x0);
}

}  // namespace

Weight power_weight(const Grid& g, double a, std::array<double, 2> center) {
  if (a == 0.0) return constant_weight(g, 1.0);
  const double h = g.cell_side();
  std::vector<double> v(g.cell_count());
  if (g.dim() == 1) {
    if (a <= -1.0 && center[0] >= 0.0 && center[0] <= 1.0)
      throw PreconditionError("power weight exponent makes a cell integral diverge (need a > -1)");
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double x0 = static_cast<double>(i) * h;
      v[i] = power_cell_average_1d(x0, x0 + h, center[0], a);
    }
  } else {
    if (a <= -2.0) throw PreconditionError("power weight exponent makes a cell integral diverge (need a > -2)");
    // Midpoint subsampling, refined near the singular point.
    for (std::size_t i = 0; i < v.size(); ++i) {
      const Coord c = g.coords(i);
      const double x0 = static_cast<double>(c[0]) * h;
      const double y0 = static_cast<double>(c[1]) * h;
      const double dx = std::max({center[0] - (x0 + h), x0 - center[0], 0.0});
      const double dy = std::max({center[1] - (y0 + h), y0 - center[1], 0.0});
      const int m = std::hypot(dx, dy) < 2.0 * h ? 32 : 2;
      double acc = 0.0;
      for (int s = 0; s < m; ++s) {
        for (int t = 0; t < m; ++t) {
          const double px = x0 + (s + 0.5) * h / m;
          const double py = y0 + (t + 0.5) * h / m;
          acc += std::pow(std::max(std::hypot(px - center[0], py - center[1]), 1e-300), a);
        }
      }
      v[i] = acc / (m * m);
    }
  }
  return Weight(GridFunction(g, std::move(v), "weight"));
}

Weight step_weight(const Grid& g, double breakpoint, double low, double high) {
  if (!(low > 0.0 && high > 0.0)) throw PreconditionError("step weight levels must be positive");
  return Weight(GridFunction::from_fn(g, [&](std::array<double, 2> x) { return x[0] < breakpoint ? low : high; },
                                      "weight"));
}

namespace {

std::array<double, 2> read_center(const nlohmann::json& spec) {
  if (!spec.contains("center")) return {0.5, 0.5};
  const auto& c = spec.at("center");
  if (c.is_array()) return {c.at(0).get<double>(), c.size() > 1 ? c.at(1).get<double>() : c.at(0).get<double>()};
  return {c.get<double>(), c.get<double>()};
}

}  // namespace

Weight make_weight(const Grid& g, const nlohmann::json& spec) {
  const std::string kind = spec.at("kind").get<std::string>();
  if (kind == "constant") return constant_weight(g, spec.value("c", 1.0));
  if (kind == "power") return power_weight(g, spec.at("a").get<double>(), read_center(spec));
  if (kind == "step")
    return step_weight(g, spec.value("breakpoint", 0.5), spec.value("low", 1.0), spec.at("high").get<double>());
  if (kind == "product") {
    std::vector<double> v(g.cell_count(), 1.0);
    for (const auto& f : spec.at("factors")) {
      const Weight w = make_weight(g, f);
      for (std::size_t i = 0; i < v.size(); ++i) v[i] *= w[i];
    }
    return Weight(GridFunction(g, std::move(v), "weight"));
  }
  throw UnknownNameError("unknown weight kind '" + kind + "'");
}

}  // namespace bloomvmo
