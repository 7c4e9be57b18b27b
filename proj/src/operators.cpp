#include "bloomvmo/operators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "bloomvmo/errors.hpp"

namespace bloomvmo {

namespace {

void check_alpha(double alpha, int n) {
  if (!(alpha > 0.0 && alpha < n)) throw PreconditionError("alpha must lie in (0, n)");
}

double cube_side(const Grid& g, const CellBox& box) { return static_cast<double>(box.side()) * g.cell_side(); }

}  // namespace

GridFunction frac_maximal(const GridFunction& f, double alpha, const LatticeSet& lattices) {
  const Grid& g = f.grid();
  if (!(alpha >= 0.0 && alpha < g.dim())) throw PreconditionError("alpha must lie in [0, n)");
  const PrefixTable t(f.abs());
  std::vector<double> out(g.cell_count(), 0.0);
  for (const Lattice& lat : lattices) {
    for_each_cube(lat, {}, [&](const DyadicCube&, const CellBox& box) {
      const double v = std::pow(cube_side(g, box), alpha) * t.average(box);
      for_each_cell(g, box, [&](std::size_t x) { out[x] = std::max(out[x], v); });
    });
  }
  return GridFunction(g, std::move(out), "M_alpha f");
}

// ---------------------------------------------------------------------------

MaximalCommutator::MaximalCommutator(GridFunction b, double alpha, const LatticeSet& lattices)
    : b_(std::move(b)), alpha_(alpha) {
  const Grid& g = b_.grid();
  check_alpha(alpha, g.dim());
  for (const Lattice& lat : lattices) {
    for_each_cube(lat, {}, [&](const DyadicCube&, const CellBox& box) {
      Plan p;
      p.box = box;
      p.scale = std::pow(cube_side(g, box), alpha) / static_cast<double>(box.cell_count());
      p.begin = order_.size();
      for_each_cell(g, box, [&](std::size_t c) { order_.push_back(c); });
      p.end = order_.size();
      std::stable_sort(order_.begin() + static_cast<std::ptrdiff_t>(p.begin), order_.end(),
                       [&](std::size_t x, std::size_t y) { return b_[x] < b_[y]; });
      cubes_.push_back(p);
    });
  }
}

namespace {

// For cells sorted by b, returns sum_y w_y |t - b_y| at the i-th sorted cell
// given inclusive prefix sums; ties contribute zero on either side.
inline long double abs_moment(long double t, long double w_le, long double bw_le, long double w_tot,
                              long double bw_tot) {
  return t * w_le - bw_le + (bw_tot - bw_le) - t * (w_tot - w_le);
}

}  // namespace

std::vector<double> MaximalCommutator::evaluate(std::span<const double> f,
                                                std::vector<std::uint32_t>* selection) const {
  const std::size_t n = b_.size();
  std::vector<double> out(n, -1.0);
  if (selection) selection->assign(n, 0);
  for (std::size_t id = 0; id < cubes_.size(); ++id) {
    const Plan& p = cubes_[id];
    long double w_tot = 0.0L, bw_tot = 0.0L;
    for (std::size_t k = p.begin; k < p.end; ++k) {
      const std::size_t y = order_[k];
      w_tot += std::abs(f[y]);
      bw_tot += static_cast<long double>(b_[y]) * std::abs(f[y]);
    }
    long double w_le = 0.0L, bw_le = 0.0L;
    for (std::size_t k = p.begin; k < p.end; ++k) {
      const std::size_t x = order_[k];
      w_le += std::abs(f[x]);
      bw_le += static_cast<long double>(b_[x]) * std::abs(f[x]);
      const double v =
          std::max(0.0, p.scale * static_cast<double>(abs_moment(b_[x], w_le, bw_le, w_tot, bw_tot)));
      if (v > out[x]) {
        out[x] = v;
        if (selection) (*selection)[x] = static_cast<std::uint32_t>(id);
      }
    }
  }
  return out;
}

GridFunction MaximalCommutator::apply(const GridFunction& f) const {
  return GridFunction(grid(), evaluate(f.span()), "M_alpha^b f");
}

std::vector<double> MaximalCommutator::apply_selection(std::span<const std::uint32_t> selection,
                                                       std::span<const double> f) const {
  const std::size_t n = b_.size();
  std::vector<double> out(n, 0.0);
  std::vector<std::uint32_t> ids(selection.begin(), selection.end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  for (std::uint32_t id : ids) {
    const Plan& p = cubes_[id];
    long double w_tot = 0.0L, bw_tot = 0.0L;
    for (std::size_t k = p.begin; k < p.end; ++k) {
      const std::size_t y = order_[k];
      w_tot += f[y];
      bw_tot += static_cast<long double>(b_[y]) * f[y];
    }
    long double w_le = 0.0L, bw_le = 0.0L;
    for (std::size_t k = p.begin; k < p.end; ++k) {
      const std::size_t x = order_[k];
      w_le += f[x];
      bw_le += static_cast<long double>(b_[x]) * f[x];
      if (selection[x] == id) out[x] = p.scale * static_cast<double>(abs_moment(b_[x], w_le, bw_le, w_tot, bw_tot));
    }
  }
  return out;
}

std::vector<double> MaximalCommutator::adjoint_selection(std::span<const std::uint32_t> selection,
                                                         std::span<const double> g) const {
  const std::size_t n = b_.size();
  std::vector<double> out(n, 0.0);
  std::vector<std::uint32_t> ids(selection.begin(), selection.end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  for (std::uint32_t id : ids) {
    const Plan& p = cubes_[id];
    auto weight = [&](std::size_t x) { return selection[x] == id ? static_cast<long double>(g[x]) : 0.0L; };
    long double w_tot = 0.0L, bw_tot = 0.0L;
    for (std::size_t k = p.begin; k < p.end; ++k) {
      const std::size_t x = order_[k];
      w_tot += weight(x);
      bw_tot += b_[x] * weight(x);
    }
    long double w_le = 0.0L, bw_le = 0.0L;
    for (std::size_t k = p.begin; k < p.end; ++k) {
      const std::size_t y = order_[k];
      w_le += weight(y);
      bw_le += b_[y] * weight(y);
      out[y] += p.scale * static_cast<double>(abs_moment(b_[y], w_le, bw_le, w_tot, bw_tot));
    }
  }
  return out;
}

Eigen::MatrixXd MaximalCommutator::all_cubes_majorant() const {
  const auto n = static_cast<Eigen::Index>(b_.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (const Plan& p : cubes_) {
    for (std::size_t ky = p.begin; ky < p.end; ++ky) {
      const std::size_t y = order_[ky];
      for (std::size_t kx = p.begin; kx < p.end; ++kx) {
        const std::size_t x = order_[kx];
        m(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)) += p.scale * std::abs(b_[x] - b_[y]);
      }
    }
  }
  return m;
}

GridFunction frac_maximal_commutator(const GridFunction& f, const GridFunction& b, double alpha,
                                     const LatticeSet& lattices) {
  return MaximalCommutator(b, alpha, lattices).apply(f);
}

GridFunction maximal_commutator(const GridFunction& f, const GridFunction& b, double alpha,
                                const LatticeSet& lattices) {
  const GridFunction mf = frac_maximal(f, alpha, lattices);
  const GridFunction mbf = frac_maximal(b.times(f), alpha, lattices);
  std::vector<double> out(f.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = b[i] * mf[i] - mbf[i];
  return GridFunction(f.grid(), std::move(out), "[b,M_alpha] f");
}

// ---------------------------------------------------------------------------

double riesz_cell_self_integral(int dim, double h, double alpha) {
  check_alpha(alpha, dim);
  if (dim == 1) return 2.0 * std::pow(h / 2.0, alpha) / alpha;
  // Polar coordinates over the eight triangles of the square:
  // (8/alpha) (h/2)^alpha int_0^{pi/4} sec^alpha(theta) d theta, by Simpson's rule.
  constexpr int kPanels = 2000;
  const double top = std::numbers::pi / 4.0;
  const double step = top / kPanels;
  double acc = 0.0;
  for (int i = 0; i <= kPanels; ++i) {
    const double w = (i == 0 || i == kPanels) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    acc += w * std::pow(1.0 / std::cos(i * step), alpha);
  }
  const double integral = acc * step / 3.0;
  return 8.0 / alpha * std::pow(h / 2.0, alpha) * integral;
}

KernelMatrix riesz_kernel(const Grid& g, double alpha) {
  check_alpha(alpha, g.dim());
  if (g.cell_count() > kMaxKernelCells)
    throw PreconditionError("dense kernel limited to " + std::to_string(kMaxKernelCells) + " cells");
  const auto n = static_cast<Eigen::Index>(g.cell_count());
  KernelMatrix k;
  k.grid = g;
  k.alpha = alpha;
  k.m.resize(n, n);
  const double vol = g.cell_volume();
  const double diag = riesz_cell_self_integral(g.dim(), g.cell_side(), alpha);
  const double e = alpha - g.dim();
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto yj = g.midpoint(static_cast<std::size_t>(j));
    for (Eigen::Index i = 0; i < n; ++i) {
      if (i == j) {
        k.m(i, j) = diag;
        continue;
      }
      const auto xi = g.midpoint(static_cast<std::size_t>(i));
      const double r = g.dim() == 1 ? std::abs(xi[0] - yj[0]) : std::hypot(xi[0] - yj[0], xi[1] - yj[1]);
      k.m(i, j) = vol * std::pow(r, e);
    }
  }
  return k;
}

KernelMatrix commutator_kernel(const KernelMatrix& k, const GridFunction& b) {
  KernelMatrix out = k;
  out.is_signed = true;
  for (Eigen::Index j = 0; j < k.m.cols(); ++j) {
    for (Eigen::Index i = 0; i < k.m.rows(); ++i) {
      out.m(i, j) *= b[static_cast<std::size_t>(i)] - b[static_cast<std::size_t>(j)];
    }
  }
  return out;
}

KernelMatrix majorant_kernel(const KernelMatrix& k, const GridFunction& b) {
  KernelMatrix out = commutator_kernel(k, b);
  out.m = out.m.cwiseAbs();
  out.is_signed = false;
  return out;
}

GridFunction apply_kernel(const KernelMatrix& k, const GridFunction& f) {
  const Eigen::Map<const Eigen::VectorXd> x(f.values().data(), static_cast<Eigen::Index>(f.size()));
  const Eigen::VectorXd y = k.m * x;
  return GridFunction(k.grid, std::vector<double>(y.data(), y.data() + y.size()), "Kf");
}

GridFunction riesz_potential(const GridFunction& f, double alpha) {
  return apply_kernel(riesz_kernel(f.grid(), alpha), f);
}

GridFunction riesz_commutator(const GridFunction& f, const GridFunction& b, double alpha) {
  return apply_kernel(commutator_kernel(riesz_kernel(f.grid(), alpha), b), f);
}

// ---------------------------------------------------------------------------

PartnerCube partner_ball(const Grid& g, const CellBox& b, double a, double alpha) {
  if (!(a >= 4.0)) throw PreconditionError("partner distance factor A must be at least 4");
  check_alpha(alpha, g.dim());
  const double h = g.cell_side();
  const int n = g.dim();
  PartnerCube out;
  out.box = b;
  out.radius = cube_side(g, b) * std::sqrt(static_cast<double>(n)) / 2.0;
  const auto shift = static_cast<Index>(std::floor(a * out.radius / h + 1e-9));
  CellBox p = b;
  p.lo[0] += shift;
  p.hi[0] += shift;
  out.shift_cells = shift;
  if (!p.inside(g)) {
    p = b;
    p.lo[0] -= shift;
    p.hi[0] -= shift;
    out.shift_cells = -shift;
    if (!p.inside(g))
      throw DomainError("partner cube leaves the domain in both directions; use a smaller A or a smaller cube");
  }
  out.partner = p;
  const Index side = b.side();
  out.gap = static_cast<double>(shift - side) * h;
  const double e = alpha - n;
  const double dx = static_cast<double>(shift + side) * h;
  const double dy = n == 2 ? static_cast<double>(side) * h : 0.0;
  const double dmax = std::hypot(dx, dy);
  const double dx_mid = static_cast<double>(shift + side - 1) * h;
  const double dy_mid = n == 2 ? static_cast<double>(side - 1) * h : 0.0;
  const double dmax_mid = std::hypot(dx_mid, dy_mid);
  out.min_ratio = std::pow(dmax / out.radius, e);
  out.grid_min_ratio = std::pow(dmax_mid / out.radius, e);
  out.grid_distance_error = dmax - dmax_mid;
  out.bound = std::pow(a + 2.0, e);
  out.ok = out.min_ratio >= out.bound * (1.0 - 1e-12);
  return out;
}

GapValue lemma41_gap(const CellBox& q, const BloomTriple& t) {
  const Grid& g = t.lambda1().grid();
  GapValue v;
  v.lhs = 1.0 / t.nu().integral(q);
  const double measure = q.measure(g);
  const double l1 = std::pow(t.lambda1().integral(q, t.p()), 1.0 / t.p());
  const double l2 = std::pow(t.lambda2().integral(q, -t.q_conj()), 1.0 / t.q_conj());
  v.rhs = std::pow(measure, t.alpha() / t.dim()) / (l1 * l2);
  v.ratio = v.lhs / v.rhs;
  return v;
}

GapSweep lemma41_sweep(const BloomTriple& t, const LatticeSet& lattices) {
  GapSweep s;
  s.min_ratio = std::numeric_limits<double>::infinity();
  for (const Lattice& lat : lattices) {
    for_each_cube(lat, {}, [&](const DyadicCube& q, const CellBox& box) {
      const GapValue v = lemma41_gap(box, t);
      ++s.cubes;
      s.min_ratio = std::min(s.min_ratio, v.ratio);
      if (v.ratio > s.max_ratio) {
        s.max_ratio = v.ratio;
        s.argmax = q;
      }
    });
  }
  return s;
}

// ---------------------------------------------------------------------------

DominationReport check_sparse_domination(const GridFunction& f, const GridFunction& b, double alpha,
                                         const LatticeSet& lattices, double lambda) {
  const Grid& g = f.grid();
  const GridFunction af = f.abs();
  const KernelMatrix maj = majorant_kernel(riesz_kernel(g, alpha), b);
  DominationReport rep;
  rep.lhs = apply_kernel(maj, af).values();
  rep.rhs.assign(g.cell_count(), 0.0);

  const PrefixTable tb(b);
  auto deviation = [&](const CellBox& q) {
    const double bq = tb.average(q);
    return b.map([bq](double v) { return std::abs(v - bq); });
  };
  const std::vector<StoppingRule> rules = {
      {[af](const CellBox&) { return af; }, false},
      {[&](const CellBox& q) { return deviation(q).times(af); }, true},
      {[&](const CellBox& q) { return deviation(q); }, true},
  };
  for (const Lattice& lat : lattices) {
    SparseFamily s = build_sparse_stopping(lat, rules, lambda);
    const GridFunction t1 = apply_T_S_b_alpha(af, b, s, alpha, false);
    const GridFunction t2 = apply_T_S_b_alpha(af, b, s, alpha, true);
    for (std::size_t x = 0; x < rep.rhs.size(); ++x) rep.rhs[x] += t1[x] + t2[x];
    rep.families.push_back(std::move(s));
  }

  double lmax = 0.0;
  for (double v : rep.lhs) lmax = std::max(lmax, v);
  for (std::size_t x = 0; x < rep.rhs.size(); ++x) {
    if (rep.rhs[x] > 0.0) {
      const double c = rep.lhs[x] / rep.rhs[x];
      if (c > rep.constant) {
        rep.constant = c;
        rep.worst_cell = x;
      }
    } else if (rep.lhs[x] > 1e-14 * lmax) {
      ++rep.violations;
    }
  }
  return rep;
}

}  // namespace bloomvmo
