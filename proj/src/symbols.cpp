#include "bloomvmo/symbols.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "bloomvmo/errors.hpp"

namespace bloomvmo {

namespace {

std::array<double, 2> read_point(const nlohmann::json& spec, const char* key, double dflt) {
  if (!spec.contains(key)) return {dflt, dflt};
  const auto& c = spec.at(key);
  if (c.is_array()) return {c.at(0).get<double>(), c.size() > 1 ? c.at(1).get<double>() : c.at(0).get<double>()};
  return {c.get<double>(), c.get<double>()};
}

double radius_of(const Grid& g, std::array<double, 2> x, std::array<double, 2> c) {
  return g.dim() == 1 ? std::abs(x[0] - c[0]) : std::hypot(x[0] - c[0], x[1] - c[1]);
}

// Cell average of log|x - c| over [x0, x1).
double log_cell_average(double x0, double x1, double c) {
  auto antideriv = [&](double x) {
    const double d = x - c;
    if (d == 0.0) return 0.0;
    return d * std::log(std::abs(d)) - d;
  };
  return (antideriv(x1) - antideriv(x0)) / (x1 - x0);
}

}  // namespace

GridFunction bump_symbol(const Grid& g, std::array<double, 2> center, double radius, double amplitude) {
  if (!(radius > 0.0)) throw PreconditionError("bump radius must be positive");
  return GridFunction::from_fn(
      g,
      [&](std::array<double, 2> x) {
        const double r = radius_of(g, x, center) / radius;
        if (r >= 1.0) return 0.0;
        return amplitude * std::exp(1.0 - 1.0 / (1.0 - r * r));
      },
      "b");
}

GridFunction oscillator_symbol(const Grid& g, double amplitude) {
  const Index n = g.per_axis();
  std::vector<double> v(g.cell_count(), 0.0);
  for (int k = 1; k <= g.depth() - 1; ++k) {
    const Index side = n >> k;  // cells per axis of P_k
    CellBox p;
    p.lo = {side, g.dim() == 2 ? side : 0};
    p.hi = {2 * side, g.dim() == 2 ? 2 * side : 1};
    for_each_cell(g, p, [&](std::size_t c) {
      if (g.coords(c)[0] < side + side / 2) v[c] = amplitude;
    });
  }
  return GridFunction(g, std::move(v), "b");
}

GridFunction random_symbol(const Grid& g, std::uint64_t seed, double amplitude) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-amplitude, amplitude);
  std::vector<double> v(g.cell_count());
  for (double& x : v) x = u(rng);
  return GridFunction(g, std::move(v), "b");
}

GridFunction make_symbol(const Grid& g, const nlohmann::json& spec) {
  const std::string kind = spec.at("kind").get<std::string>();
  if (kind == "constant") return GridFunction::constant(g, spec.value("c", 1.0), "b");
  if (kind == "step") {
    const double bp = spec.value("breakpoint", 0.5);
    const double lo = spec.value("low", 0.0);
    const double hi = spec.value("high", 1.0);
    return GridFunction::from_fn(g, [&](std::array<double, 2> x) { return x[0] < bp ? lo : hi; }, "b");
  }
  if (kind == "bump")
    return bump_symbol(g, read_point(spec, "center", 0.5), spec.value("radius", 0.25), spec.value("amplitude", 1.0));
  if (kind == "oscillator") return oscillator_symbol(g, spec.value("amplitude", 1.0));
  if (kind == "polynomial") {
    const auto coeffs = spec.at("coeffs").get<std::vector<double>>();
    return GridFunction::from_fn(
        g,
        [&](std::array<double, 2> x) {
          double acc = 0.0;
          for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * x[0] + *it;
          return acc;
        },
        "b");
  }
  if (kind == "log") {
    const auto c = read_point(spec, "center", 0.5);
    if (g.dim() == 1) {
      std::vector<double> v(g.cell_count());
      const double h = g.cell_side();
      for (std::size_t i = 0; i < v.size(); ++i) v[i] = log_cell_average(i * h, (i + 1) * h, c[0]);
      return GridFunction(g, std::move(v), "b");
    }
    return GridFunction::from_fn(
        g, [&](std::array<double, 2> x) { return std::log(std::max(radius_of(g, x, c), 1e-300)); }, "b");
  }
  if (kind == "sine") {
    const double f = spec.value("frequency", 1.0);
    const double a = spec.value("amplitude", 1.0);
    return GridFunction::from_fn(
        g, [&](std::array<double, 2> x) { return a * std::sin(2.0 * std::numbers::pi * f * x[0]); }, "b");
  }
  if (kind == "random") return random_symbol(g, spec.value("seed", std::uint64_t{0}), spec.value("amplitude", 1.0));
  if (kind == "indicator") {
    const double lo = spec.value("lo", 0.0), hi = spec.value("hi", 1.0);
    const bool two_d = g.dim() == 2;
    return GridFunction::from_fn(
        g,
        [=](std::array<double, 2> x) {
          const bool in = lo <= x[0] && x[0] < hi && (!two_d || (lo <= x[1] && x[1] < hi));
          return in ? 1.0 : 0.0;
        },
        "f");
  }
  throw UnknownNameError("unknown symbol kind '" + kind + "'");
}

}  // namespace bloomvmo
