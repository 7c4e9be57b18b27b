#include "bloomvmo/norms.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <random>

#include "bloomvmo/errors.hpp"

namespace bloomvmo {

double weighted_norm(std::span<const double> f, const Weight& lambda, double p) {
  const Grid& g = lambda.grid();
  if (f.size() != g.cell_count()) throw PreconditionError("function and weight sizes differ");
  if (!(p >= 1.0)) throw PreconditionError("norm exponent must be at least 1");
  long double acc = 0.0L;
  for (std::size_t i = 0; i < f.size(); ++i) acc += std::pow(std::abs(f[i]) * lambda[i], p);
  return std::pow(static_cast<double>(acc) * g.cell_volume(), 1.0 / p);
}

double weighted_norm(const GridFunction& f, const Weight& lambda, double p) {
  return weighted_norm(f.span(), lambda, p);
}

NormSpaces NormSpaces::from_triple(const BloomTriple& t) { return {t.p(), t.q(), t.lambda1(), t.lambda2()}; }

NormSpaces NormSpaces::unweighted(const Grid& g, double p, double q) {
  const Weight one = constant_weight(g, 1.0);
  return {p, q, one, one};
}

// ---------------------------------------------------------------------------

Eigen::VectorXd MaximalCommutatorOperator::apply(const Eigen::VectorXd& x) {
  const std::vector<double> v = m_.evaluate(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())),
                                            &selection_);
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Eigen::VectorXd MaximalCommutatorOperator::adjoint(const Eigen::VectorXd& g) {
  const std::vector<double> v =
      m_.adjoint_selection(selection_, std::span<const double>(g.data(), static_cast<std::size_t>(g.size())));
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

const Eigen::MatrixXd& MaximalCommutatorOperator::majorant() {
  if (!have_majorant_) {
    majorant_ = m_.all_cubes_majorant();
    have_majorant_ = true;
  }
  return majorant_;
}

FracMaximalOperator::FracMaximalOperator(const LatticeSet& lattices, double alpha) : grid_(lattices.grid()) {
  if (!(alpha >= 0.0 && alpha < grid_.dim())) throw PreconditionError("alpha must lie in [0, n)");
  for (const Lattice& lat : lattices) {
    for_each_cube(lat, {}, [&](const DyadicCube&, const CellBox& box) {
      const double side = static_cast<double>(box.side()) * grid_.cell_side();
      cubes_.push_back({box, std::pow(side, alpha) / static_cast<double>(box.cell_count())});
    });
  }
}

Eigen::VectorXd FracMaximalOperator::apply(const Eigen::VectorXd& x) {
  const PrefixTable t(GridFunction(grid_, std::vector<double>(x.data(), x.data() + x.size())).abs());
  Eigen::VectorXd out = Eigen::VectorXd::Constant(x.size(), -1.0);
  selection_.assign(static_cast<std::size_t>(x.size()), 0);
  for (std::uint32_t id = 0; id < cubes_.size(); ++id) {
    const double v = cubes_[id].scale * static_cast<double>(t.cell_sum(cubes_[id].box));
    for_each_cell(grid_, cubes_[id].box, [&](std::size_t c) {
      if (v > out[static_cast<Eigen::Index>(c)]) {
        out[static_cast<Eigen::Index>(c)] = v;
        selection_[c] = id;
      }
    });
  }
  return out;
}

Eigen::VectorXd FracMaximalOperator::adjoint(const Eigen::VectorXd& g) {
  std::map<std::uint32_t, double> mass;
  for (std::size_t c = 0; c < selection_.size(); ++c) mass[selection_[c]] += g[static_cast<Eigen::Index>(c)];
  Eigen::VectorXd out = Eigen::VectorXd::Zero(g.size());
  for (const auto& [id, m] : mass) {
    const double v = m * cubes_[id].scale;
    for_each_cell(grid_, cubes_[id].box, [&](std::size_t c) { out[static_cast<Eigen::Index>(c)] += v; });
  }
  return out;
}

const Eigen::MatrixXd& FracMaximalOperator::majorant() {
  if (!have_majorant_) {
    const auto n = static_cast<Eigen::Index>(grid_.cell_count());
    majorant_ = Eigen::MatrixXd::Zero(n, n);
    for (const Cube& q : cubes_) {
      const std::vector<std::size_t> cells = cells_of(grid_, q.box);
      for (std::size_t x : cells) {
        for (std::size_t y : cells) majorant_(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)) += q.scale;
      }
    }
    have_majorant_ = true;
  }
  return majorant_;
}

// ---------------------------------------------------------------------------

namespace {

double lp(const Eigen::VectorXd& v, double p) {
  long double acc = 0.0L;
  for (Eigen::Index i = 0; i < v.size(); ++i) acc += std::pow(std::abs(v[i]), p);
  return std::pow(static_cast<double>(acc), 1.0 / p);
}

Eigen::VectorXd duality_map(const Eigen::VectorXd& v, double s) {
  Eigen::VectorXd out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = std::copysign(std::pow(std::abs(v[i]), s - 1.0), v[i]);
  return out;
}

struct Ascent {
  double value = 0.0;
  Eigen::VectorXd x;
  std::vector<double> log;
  int iterations = 0;
};

using LinearMap = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

// Ascent for max ||A x||_q over the unit l^p sphere: each step maximizes the
// linearized objective, so the value never decreases (up to rounding).
Ascent ascend(const LinearMap& apply, const LinearMap& adjoint, Eigen::VectorXd x, double p, double q,
              const BoydOptions& opts) {
  const double pc = conjugate(p);
  Ascent a;
  const double nx = lp(x, p);
  if (!(nx > 0.0)) throw PreconditionError("power method start vector is zero");
  x /= nx;
  Eigen::VectorXd y = apply(x);
  a.value = lp(y, q);
  a.x = x;
  a.log.push_back(a.value);
  for (int it = 1; it <= opts.max_iterations; ++it) {
    if (!(a.value > 0.0)) break;
    const Eigen::VectorXd z = adjoint(duality_map(y, q));
    Eigen::VectorXd xn = duality_map(z, pc);
    const double nn = lp(xn, p);
    if (!(nn > 0.0)) break;
    xn /= nn;
    const Eigen::VectorXd yn = apply(xn);
    const double vn = lp(yn, q);
    a.iterations = it;
    if (vn < a.value * (1.0 - 1e-10))
      throw InvariantViolation("power iteration lost monotonicity (" + std::to_string(vn) + " < " +
                               std::to_string(a.value) + ")");
    const double gain = (vn - a.value) / a.value;
    a.log.push_back(std::max(vn, a.value));
    if (vn >= a.value) {
      a.value = vn;
      a.x = xn;
      y = yn;
    } else {
      break;
    }
    if (gain < opts.tolerance) break;
  }
  return a;
}

void check_exponents(double p, double q) {
  if (!(p > 1.0 && q >= p && std::isfinite(q))) throw PreconditionError("power method needs 1 < p <= q < inf");
}

struct Scaling {
  Eigen::VectorXd d1, d2;
};

Scaling scaling(const NormSpaces& s) {
  const Grid& g = s.lambda1.grid();
  const auto n = static_cast<Eigen::Index>(g.cell_count());
  Scaling sc{Eigen::VectorXd(n), Eigen::VectorXd(n)};
  const double v = g.cell_volume();
  for (Eigen::Index i = 0; i < n; ++i) {
    sc.d1[i] = s.lambda1[static_cast<std::size_t>(i)] * std::pow(v, 1.0 / s.p);
    sc.d2[i] = s.lambda2[static_cast<std::size_t>(i)] * std::pow(v, 1.0 / s.q);
  }
  return sc;
}

Eigen::MatrixXd scaled_matrix(const Eigen::MatrixXd& m, const Scaling& sc) {
  return sc.d2.asDiagonal() * m * sc.d1.cwiseInverse().asDiagonal();
}

void certify_witness(NormBracket& br, const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& apply_raw,
                     const NormSpaces& s) {
  const Eigen::VectorXd f = Eigen::Map<const Eigen::VectorXd>(br.witness.data(),
                                                              static_cast<Eigen::Index>(br.witness.size()));
  const Eigen::VectorXd tf = apply_raw(f);
  const double nf = weighted_norm(std::span<const double>(f.data(), static_cast<std::size_t>(f.size())),
                                  s.lambda1, s.p);
  const double ntf = weighted_norm(std::span<const double>(tf.data(), static_cast<std::size_t>(tf.size())),
                                   s.lambda2, s.q);
  br.witness_ratio = nf > 0.0 ? ntf / nf : 0.0;
  if (std::abs(br.witness_ratio - br.lower) > 1e-9 * std::max(br.lower, 1e-300) && br.lower > 0.0)
    throw InvariantViolation("witness does not reproduce the lower bound");
}

}  // namespace

double matrix_upper_bound(const Eigen::MatrixXd& a, double p, double q) {
  check_exponents(p, q);
  if ((a.array() < 0.0).any()) throw PreconditionError("upper bound needs a nonnegative matrix");
  const double pc = conjugate(p);
  // Rows: ||Ax||_q^q <= sum_i (sum_j a_ij^p')^(q/p') ||x||_p^q.
  long double rows = 0.0L;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    long double s = 0.0L;
    for (Eigen::Index j = 0; j < a.cols(); ++j) s += std::pow(a(i, j), pc);
    rows += std::pow(static_cast<double>(s), q / pc);
  }
  const double u1 = std::pow(static_cast<double>(rows), 1.0 / q);
  // Columns, via the adjoint from l^q' to l^p'.
  long double cols = 0.0L;
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    long double s = 0.0L;
    for (Eigen::Index i = 0; i < a.rows(); ++i) s += std::pow(a(i, j), q);
    cols += std::pow(static_cast<double>(s), pc / q);
  }
  const double u2 = std::pow(static_cast<double>(cols), 1.0 / pc);
  // ||A||_{p->q} <= ||A||_{p->p} <= (max column sum)^(1/p) (max row sum)^(1/p').
  const double col_max = a.colwise().sum().maxCoeff();
  const double row_max = a.rowwise().sum().maxCoeff();
  const double u3 = std::pow(col_max, 1.0 / p) * std::pow(row_max, 1.0 / pc);
  return std::min({u1, u2, u3});
}

NormBracket boyd_norm(PowerOperator& t, const NormSpaces& s, const BoydOptions& opts) {
  check_exponents(s.p, s.q);
  const Eigen::MatrixXd& maj = t.majorant();
  if ((maj.array() < 0.0).any()) throw PreconditionError("operator is not sign preserving; use signed_norm");
  const Scaling sc = scaling(s);
  auto apply = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return sc.d2.cwiseProduct(t.apply(x.cwiseQuotient(sc.d1)));
  };
  auto adjoint = [&](const Eigen::VectorXd& g) -> Eigen::VectorXd {
    return t.adjoint(sc.d2.cwiseProduct(g)).cwiseQuotient(sc.d1);
  };
  const auto n = static_cast<Eigen::Index>(t.size());
  std::vector<Eigen::VectorXd> starts{Eigen::VectorXd::Ones(n)};
  if (!t.linear()) {
    const NormBracket mb = boyd_norm(maj, s, opts);
    starts.push_back(Eigen::Map<const Eigen::VectorXd>(mb.witness.data(), n).cwiseProduct(sc.d1));
    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int k = 0; k < opts.random_starts; ++k) {
      Eigen::VectorXd v(n);
      for (Eigen::Index i = 0; i < n; ++i) v[i] = std::exp(2.0 * normal(rng));
      starts.push_back(v);
    }
  }
  Ascent a;
  a.value = -1.0;
  int total = 0;
  for (const Eigen::VectorXd& x0 : starts) {
    if (!(x0.maxCoeff() > 0.0)) continue;
    Ascent r = ascend(apply, adjoint, x0, s.p, s.q, opts);
    total += r.iterations;
    if (r.value > a.value) a = std::move(r);
  }
  a.iterations = total;
  NormBracket br;
  br.lower = a.value;
  br.log = a.log;
  br.iterations = a.iterations;
  const Eigen::VectorXd f = a.x.cwiseQuotient(sc.d1);
  br.witness.assign(f.data(), f.data() + f.size());
  br.upper = matrix_upper_bound(scaled_matrix(maj, sc), s.p, s.q);
  br.upper_kind = "holder/schur bound of the nonnegative majorant";
  if (br.lower > br.upper * (1.0 + 1e-9)) throw InvariantViolation("lower bound exceeds upper bound");
  br.upper = std::max(br.upper, br.lower);
  certify_witness(br, [&](const Eigen::VectorXd& x) { return t.apply(x); }, s);
  return br;
}

NormBracket boyd_norm(const Eigen::MatrixXd& m, const NormSpaces& s, const BoydOptions& opts) {
  DenseOperator op(m);
  return boyd_norm(op, s, opts);
}

NormBracket boyd_matrix(const Eigen::MatrixXd& a, double p, double q, const BoydOptions& opts) {
  check_exponents(p, q);
  if ((a.array() < 0.0).any()) throw PreconditionError("operator is not sign preserving; use signed_norm");
  const Ascent r = ascend([&](const Eigen::VectorXd& x) -> Eigen::VectorXd { return a * x; },
                          [&](const Eigen::VectorXd& g) -> Eigen::VectorXd { return a.transpose() * g; },
                          Eigen::VectorXd::Ones(a.cols()), p, q, opts);
  NormBracket br;
  br.lower = r.value;
  br.log = r.log;
  br.iterations = r.iterations;
  br.witness.assign(r.x.data(), r.x.data() + r.x.size());
  br.witness_ratio = lp(a * r.x, q) / lp(r.x, p);
  br.upper = std::max(matrix_upper_bound(a, p, q), br.lower);
  br.upper_kind = "holder/schur bound";
  return br;
}

NormBracket signed_norm(const Eigen::MatrixXd& m, const NormSpaces& s, const SignedOptions& opts) {
  check_exponents(s.p, s.q);
  const Scaling sc = scaling(s);
  const Eigen::MatrixXd a = scaled_matrix(m, sc);
  const Eigen::MatrixXd abs_m = m.cwiseAbs();
  const NormBracket positive = boyd_norm(abs_m, s, opts.boyd);

  std::vector<Eigen::VectorXd> starts;
  const auto n = a.cols();
  starts.push_back(Eigen::VectorXd::Ones(n));
  starts.push_back(Eigen::Map<const Eigen::VectorXd>(positive.witness.data(), n).cwiseProduct(sc.d1));
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int k = 0; k < opts.starts; ++k) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = normal(rng);
    starts.push_back(v);
  }

  NormBracket br;
  br.lower = -1.0;
  for (const Eigen::VectorXd& x0 : starts) {
    if (!(x0.cwiseAbs().maxCoeff() > 0.0)) continue;
    const Ascent r = ascend([&](const Eigen::VectorXd& x) -> Eigen::VectorXd { return a * x; },
                            [&](const Eigen::VectorXd& g) -> Eigen::VectorXd { return a.transpose() * g; }, x0, s.p,
                            s.q, opts.boyd);
    br.iterations += r.iterations;
    if (r.value > br.lower) {
      br.lower = r.value;
      br.log = r.log;
      const Eigen::VectorXd f = r.x.cwiseQuotient(sc.d1);
      br.witness.assign(f.data(), f.data() + f.size());
    }
  }
  br.lower = std::max(br.lower, 0.0);
  br.upper = std::max(positive.upper, br.lower);
  br.upper_kind = "power method bracket of |kernel|";
  certify_witness(br, [&](const Eigen::VectorXd& x) -> Eigen::VectorXd { return m * x; }, s);
  return br;
}

}  // namespace bloomvmo
