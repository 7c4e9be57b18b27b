#include <cmath>
#include <numbers>

#include "doctest.h"

#include "../oracles.hpp"
#include "bloomvmo/errors.hpp"
#include "bloomvmo/operators.hpp"
#include "bloomvmo/symbols.hpp"

using namespace bloomvmo;

TEST_CASE("fractional maximal function matches the exhaustive oracle") {
  oracle::Gen gen(71);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = gen.integer(1, 2);
    const Grid g(n, n == 1 ? 8 : 4);
    const LatticeSet all = LatticeSet::all_shifts(g);
    const GridFunction f = gen.function(g);
    const double alpha = gen.coin() ? 0.0 : gen.uniform(0.05, 0.95) * n;
    CHECK(oracle::max_rel_diff(frac_maximal(f, alpha, all).values(), oracle::frac_maximal(f, alpha, all)) <= 1e-12);
  }
}

TEST_CASE("fractional maximal function: indicator and constant") {
  const Grid g(1, 6);
  const LatticeSet all = LatticeSet::all_shifts(g);
  const Lattice lat(g, 0);
  const CellBox q = lat.box({0, 3, {4, 0}});
  const GridFunction chi =
      GridFunction::from_fn(g, [&](std::array<double, 2> x) { return q.contains_cell({static_cast<Index>(x[0] * 64), 0}) ? 1.0 : 0.0; });
  const GridFunction m0 = frac_maximal(chi, 0.0, all);
  for (Index c = q.lo[0]; c < q.hi[0]; ++c) CHECK(m0[static_cast<std::size_t>(c)] == doctest::Approx(1.0));
  const GridFunction m = frac_maximal(GridFunction::constant(g, 1.0), 0.5, all);
  for (double v : m.values()) CHECK(v == doctest::Approx(1.0));  // the root contains every cell
}

TEST_CASE("fractional maximal function is sublinear") {
  oracle::Gen gen(73);
  const Grid g(1, 8);
  const LatticeSet all = LatticeSet::all_shifts(g);
  for (int trial = 0; trial < 10; ++trial) {
    const GridFunction f = gen.function(g), h = gen.function(g);
    std::vector<double> s(f.size());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = f[i] + h[i];
    const GridFunction ms = frac_maximal(GridFunction(g, s), 0.5, all);
    const GridFunction mf = frac_maximal(f, 0.5, all), mh = frac_maximal(h, 0.5, all);
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(ms[i] <= mf[i] + mh[i] + 1e-14);
  }
}

TEST_CASE("maximal commutator M_alpha^b matches the exhaustive oracle") {
  oracle::Gen gen(79);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = gen.integer(1, 2);
    const Grid g(n, n == 1 ? 7 : 4);
    const LatticeSet all = LatticeSet::all_shifts(g);
    const GridFunction f = gen.function(g);
    const GridFunction b = gen.coin() ? gen.function(g) : gen.blocky(g);
    const double alpha = gen.uniform(0.05, 0.95) * n;
    CHECK(oracle::max_rel_diff(frac_maximal_commutator(f, b, alpha, all).values(),
                               oracle::frac_maximal_commutator(f, b, alpha, all)) <= 1e-12);
  }
}

TEST_CASE("M_alpha^b: constants vanish, bounded by 2 |b|_inf M_alpha") {
  oracle::Gen gen(83);
  const Grid g(1, 8);
  const LatticeSet all = LatticeSet::all_shifts(g);
  const GridFunction flat = frac_maximal_commutator(gen.function(g), GridFunction::constant(g, 3.0), 0.5, all);
  for (double v : flat.values()) CHECK(v == 0.0);
  for (int trial = 0; trial < 10; ++trial) {
    const GridFunction f = gen.function(g), b = gen.function(g, -2, 2);
    double binf = 0.0;
    for (double x : b.values()) binf = std::max(binf, std::abs(x));
    const GridFunction mb = frac_maximal_commutator(f, b, 0.5, all), m = frac_maximal(f, 0.5, all);
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(mb[i] <= 2.0 * binf * m[i] * (1.0 + 1e-12));
  }
}

TEST_CASE("frozen linearization reproduces the evaluation and its transpose") {
  oracle::Gen gen(89);
  for (int trial = 0; trial < 10; ++trial) {
    const Grid g(gen.integer(1, 2), 4);
    const MaximalCommutator mc(gen.function(g), 0.5, LatticeSet::all_shifts(g));
    const GridFunction f = gen.function(g, 0.0, 1.0), h = gen.function(g, 0.0, 1.0);
    std::vector<std::uint32_t> sel;
    const std::vector<double> v = mc.evaluate(f.values(), &sel);
    CHECK(oracle::max_rel_diff(mc.apply_selection(sel, f.values()), v) <= 1e-12);
    const std::vector<double> at = mc.adjoint_selection(sel, h.values());
    const std::vector<double> af = mc.apply_selection(sel, f.values());
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
      lhs += af[i] * h[i];
      rhs += f[i] * at[i];
    }
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    // The dense majorant dominates the operator on nonnegative inputs.
    const Eigen::MatrixXd maj = mc.all_cubes_majorant();
    const Eigen::VectorXd mf = maj * Eigen::Map<const Eigen::VectorXd>(f.values().data(), static_cast<Eigen::Index>(f.size()));
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(v[i] <= mf[static_cast<Eigen::Index>(i)] * (1.0 + 1e-12));
  }
}

TEST_CASE("[b, M_alpha] is dominated by M_alpha^b for nonnegative b") {
  oracle::Gen gen(97);
  const Grid g(1, 7);
  const LatticeSet all = LatticeSet::all_shifts(g);
  const GridFunction flat = maximal_commutator(gen.function(g, 0, 1), GridFunction::constant(g, 2.0), 0.5, all);
  for (double v : flat.values())
    CHECK(v == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
  for (int trial = 0; trial < 100; ++trial) {
    const GridFunction f = gen.function(g), b = gen.function(g, 0.0, 3.0);
    const double alpha = gen.uniform(0.1, 0.9);
    const GridFunction c = maximal_commutator(f, b, alpha, all), mb = frac_maximal_commutator(f, b, alpha, all);
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(std::abs(c[i]) <= mb[i] * (1.0 + 1e-12) + 1e-14);
  }
}

TEST_CASE("Riesz kernel cell self-integral") {
  const double h = 1.0 / 64;
  for (double alpha : {0.25, 0.5, 0.75}) CHECK(riesz_cell_self_integral(1, h, alpha) == doctest::Approx(2 * std::pow(h / 2, alpha) / alpha));
  // 2D, two oracles: the polar form 8/alpha (h/2)^alpha int_0^{pi/4} sec^alpha
  // by a fine midpoint rule, and a Cartesian sum that cuts out a small disc
  // around the singularity and adds its exact mass 2 pi rho^alpha / alpha.
  for (double alpha : {0.5, 1.0, 1.5}) {
    const int panels = 200000;
    double polar = 0.0;
    for (int i = 0; i < panels; ++i) polar += std::pow(std::cos((i + 0.5) * std::numbers::pi / 4 / panels), -alpha);
    polar *= std::numbers::pi / 4 / panels * 8.0 / alpha * std::pow(h / 2, alpha);
    CHECK(riesz_cell_self_integral(2, h, alpha) == doctest::Approx(polar).epsilon(1e-9));

    const int m = 600;
    const double rho = h / 20;
    double acc = 0.0;
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) {
        const double r = std::hypot(-h / 2 + (i + 0.5) * h / m, -h / 2 + (j + 0.5) * h / m);
        if (r >= rho) acc += std::pow(r, alpha - 2.0);
      }
    }
    acc = acc * (h / m) * (h / m) + 2 * std::numbers::pi * std::pow(rho, alpha) / alpha;
    CHECK(riesz_cell_self_integral(2, h, alpha) == doctest::Approx(acc).epsilon(1e-2));
  }
}

TEST_CASE("Riesz potential of a cell indicator at its midpoint") {
  const Grid g(1, 6);
  std::vector<double> v(g.cell_count(), 0.0);
  v[20] = 1.0;
  const GridFunction out = riesz_potential(GridFunction(g, v), 0.5);
  CHECK(out[20] == doctest::Approx(2 * std::pow(g.cell_side() / 2, 0.5) / 0.5));
  CHECK_THROWS_AS(riesz_potential(GridFunction(g, v), 0.0), PreconditionError);
  CHECK_THROWS_AS(riesz_potential(GridFunction(g, v), 1.0), PreconditionError);
  CHECK_THROWS_AS(riesz_kernel(Grid(1, 13), 0.5), PreconditionError);
}

TEST_CASE("kernel structure: symmetry, linearity, positivity") {
  oracle::Gen gen(101);
  const Grid g(2, 3);
  const KernelMatrix k = riesz_kernel(g, 1.2);
  CHECK((k.m - k.m.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(k.m.minCoeff() > 0.0);
  const GridFunction f = gen.function(g), h = gen.function(g), b = gen.function(g);
  const double a = gen.uniform(-2, 2);
  std::vector<double> s(f.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = a * f[i] + h[i];
  const GridFunction lhs = riesz_commutator(GridFunction(g, s), b, 1.2);
  const GridFunction cf = riesz_commutator(f, b, 1.2), ch = riesz_commutator(h, b, 1.2);
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(lhs[i] == doctest::Approx(a * cf[i] + ch[i]).epsilon(1e-11).scale(1.0));
  const GridFunction flat = riesz_commutator(f, GridFunction::constant(g, 2.0), 1.2);
  for (double v : flat.values()) CHECK(v == 0.0);
  const GridFunction pot = riesz_potential(gen.function(g, 0, 1), 1.2);
  for (double v : pot.values()) CHECK(v > 0.0);
}

TEST_CASE("commutator chain: |[b,I]f| <= majorant integral, and M_alpha^b below it") {
  oracle::Gen gen(103);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = gen.integer(1, 2);
    const Grid g(n, n == 1 ? 7 : 4);
    const double alpha = gen.uniform(0.1, 0.9) * n;
    const GridFunction f = gen.function(g), b = gen.function(g);
    const KernelMatrix k = riesz_kernel(g, alpha);
    const GridFunction c = apply_kernel(commutator_kernel(k, b), f);
    const GridFunction maj = apply_kernel(majorant_kernel(k, b), f.abs());
    const GridFunction mb = frac_maximal_commutator(f, b, alpha, LatticeSet::all_shifts(g));
    // cube of side s: |x - y| <= sqrt(n) s, so the kernel is at least (sqrt(n) s)^(alpha - n)
    const double cube_vs_ball = std::pow(std::sqrt(static_cast<double>(n)), n - alpha);
    for (std::size_t i = 0; i < f.size(); ++i) {
      CHECK(std::abs(c[i]) <= maj[i] * (1.0 + 1e-12));
      CHECK(mb[i] <= cube_vs_ball * maj[i] * (1.0 + 1e-12));
    }
  }
}

TEST_CASE("partner cubes") {
  const Grid g(1, 8);
  const Lattice lat(g, 0);
  const PartnerCube p = partner_ball(g, lat.box({0, 4, {3, 0}}), 4.0, 0.5);
  CHECK(p.ok);
  CHECK(p.min_ratio >= (1.0 - 1e-12) / std::sqrt(6.0));
  CHECK(p.box.disjoint(p.partner));
  CHECK(p.partner.side() == p.box.side());
  CHECK(p.gap <= 5.0 * p.radius);
  for (const Lattice& l : LatticeSet::all_shifts(g)) {
    for (const DyadicCube& q : enumerate_cubes(l, {3, 7, {}})) {
      for (double a : {4.0, 5.0, 8.0}) {
        PartnerCube pc;
        try {
          pc = partner_ball(g, l.box(q), a, 0.5);
        } catch (const DomainError&) {
          continue;
        }
        CHECK(pc.ok);
        CHECK(pc.box.disjoint(pc.partner));
        CHECK(pc.partner.inside(g));
        // exhaustive pair scan over cell midpoints
        double dmax = 0.0;
        for (Index x = pc.box.lo[0]; x < pc.box.hi[0]; ++x) {
          for (Index y = pc.partner.lo[0]; y < pc.partner.hi[0]; ++y)
            dmax = std::max(dmax, static_cast<double>(std::abs(x - y)) * g.cell_side());
        }
        const double scan = std::pow(dmax / pc.radius, -0.5);
        CHECK(scan == doctest::Approx(pc.grid_min_ratio).epsilon(1e-12));
        CHECK(pc.grid_distance_error <= g.cell_side() + 1e-15);
      }
    }
  }
  CHECK_THROWS_AS(partner_ball(g, lat.box({0, 1, {0, 0}}), 4.0, 0.5), DomainError);
  CHECK_THROWS_AS(partner_ball(g, lat.box({0, 4, {0, 0}}), 3.0, 0.5), PreconditionError);
}

TEST_CASE("weight gap: exact for unit weights, scale invariant") {
  for (int n : {1, 2}) {
    const Grid g(n, n == 1 ? 8 : 4);
    const BloomTriple t = BloomTriple::make(0.5, 4.0 / 3.0, constant_weight(g, 1.0), constant_weight(g, 1.0));
    for (const Lattice& lat : LatticeSet::all_shifts(g)) {
      for_each_cube(lat, {}, [&](const DyadicCube&, const CellBox& b) {
        CHECK(lemma41_gap(b, t).ratio == doctest::Approx(1.0).epsilon(1e-12));
      });
    }
  }
  oracle::Gen gen(107);
  const Grid g(1, 6);
  const Weight l1 = gen.weight(g), l2 = gen.weight(g);
  const double c = gen.uniform(0.1, 10);
  const BloomTriple t1 = BloomTriple::make(0.5, 1.5, l1, l2), t2 = BloomTriple::make(0.5, 1.5, l1.scaled(c), l2.scaled(c));
  for_each_cube(Lattice(g, 0), {}, [&](const DyadicCube&, const CellBox& b) {
    CHECK(lemma41_gap(b, t1).ratio == doctest::Approx(lemma41_gap(b, t2).ratio).epsilon(1e-12));
  });
}

TEST_CASE("sparse domination: constants and homogeneity") {
  oracle::Gen gen(109);
  const Grid g(1, 7);
  const LatticeSet all = LatticeSet::all_shifts(g);
  const GridFunction f = gen.function(g);
  const DominationReport flat = check_sparse_domination(f, GridFunction::constant(g, 1.0), 0.5, all);
  for (double v : flat.lhs) CHECK(v == 0.0);
  CHECK(flat.violations == 0);
  const GridFunction b = make_symbol(g, {{"kind", "step"}, {"breakpoint", 0.5}, {"low", 0}, {"high", 1}});
  const DominationReport r1 = check_sparse_domination(f, b, 0.5, all);
  const DominationReport r2 = check_sparse_domination(f.scaled(7.5), b, 0.5, all);
  CHECK(r1.violations == 0);
  CHECK(r1.constant > 0.0);
  CHECK(r2.constant == doctest::Approx(r1.constant).epsilon(1e-9));
  CHECK(r1.families.size() == all.size());
}
