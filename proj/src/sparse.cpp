#include "bloomvmo/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "bloomvmo/errors.hpp"
#include "bloomvmo/oscillation.hpp"

namespace bloomvmo {

namespace {

constexpr const char* kSparseSchema = "bloomvmo.sparse/1";

// Side of a cube in [0,1) units raised to the power s.
double side_pow(const Grid& g, const CellBox& box, double s) {
  return std::pow(static_cast<double>(box.side()) * g.cell_side(), s);
}

// Prefix sums of a density restricted to one box; cheaper than a full-grid
// table when the density depends on the box.
class BoxSums {
 public:
  BoxSums(const Grid& g, const CellBox& box, const std::function<double(std::size_t)>& value)
      : box_(box), w_(box.hi[0] - box.lo[0]), h_(box.hi[1] - box.lo[1]) {
    sums_.assign(static_cast<std::size_t>((w_ + 1) * (h_ + 1)), 0.0L);
    const Index stride = g.per_axis();
    for (Index y = 0; y < h_; ++y) {
      long double row = 0.0L;
      for (Index x = 0; x < w_; ++x) {
        const Index gx = box.lo[0] + x;
        const Index gy = box.lo[1] + y;
        row += value(static_cast<std::size_t>(gx + (g.dim() == 2 ? gy * stride : 0)));
        at(x + 1, y + 1) = at(x + 1, y) + row;
      }
    }
  }

  double average(const CellBox& b) const {
    const Index x0 = b.lo[0] - box_.lo[0], x1 = b.hi[0] - box_.lo[0];
    const Index y0 = b.lo[1] - box_.lo[1], y1 = b.hi[1] - box_.lo[1];
    const long double s = get(x1, y1) - get(x0, y1) - get(x1, y0) + get(x0, y0);
    return static_cast<double>(s / static_cast<long double>(b.cell_count()));
  }

 private:
  long double& at(Index x, Index y) { return sums_[static_cast<std::size_t>(y * (w_ + 1) + x)]; }
  long double get(Index x, Index y) const { return sums_[static_cast<std::size_t>(y * (w_ + 1) + x)]; }

  CellBox box_;
  Index w_, h_;
  std::vector<long double> sums_;
};

std::vector<std::size_t> free_cells(const Grid& g, const CellBox& box, const std::vector<char>& taken) {
  std::vector<std::size_t> out;
  for_each_cell(g, box, [&](std::size_t c) {
    if (!taken[c]) out.push_back(c);
  });
  return out;
}

void sort_family(SparseFamily& s) {
  std::vector<std::size_t> order(s.cubes.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& qa = s.cubes[a];
    const auto& qb = s.cubes[b];
    if (qa.level != qb.level) return qa.level < qb.level;
    return std::tie(qa.index[1], qa.index[0]) < std::tie(qb.index[1], qb.index[0]);
  });
  SparseFamily out;
  out.grid = s.grid;
  out.shift_id = s.shift_id;
  out.eta = s.eta;
  for (std::size_t i : order) {
    out.cubes.push_back(s.cubes[i]);
    out.witnesses.push_back(std::move(s.witnesses[i]));
  }
  s = std::move(out);
}

}  // namespace

SparseCertificate verify_sparse(const SparseFamily& s) {
  SparseCertificate cert;
  if (s.cubes.size() != s.witnesses.size()) {
    cert.ok = false;
    cert.message = "cube and witness lists differ in length";
    return cert;
  }
  const Lattice lat = s.lattice();
  const Grid& g = s.grid;
  std::vector<long long> owner(g.cell_count(), -1);
  for (std::size_t i = 0; i < s.cubes.size(); ++i) {
    const DyadicCube& q = s.cubes[i];
    auto fail = [&](std::string msg) {
      cert.ok = false;
      cert.cube = q;
      cert.message = std::move(msg) + " at " + to_string(q);
      return cert;
    };
    if (q.shift_id != s.shift_id || !lat.is_member(q)) return fail("cube is not a lattice member");
    const CellBox box = lat.box(q);
    for (std::size_t c : s.witnesses[i]) {
      if (c >= g.cell_count() || !box.contains_cell(g.coords(c))) return fail("witness cell outside its cube");
      if (owner[c] >= 0) {
        cert.other = s.cubes[static_cast<std::size_t>(owner[c])];
        return fail("witness sets overlap (with " + to_string(cert.other) + ")");
      }
      owner[c] = static_cast<long long>(i);
    }
    const double ratio = static_cast<double>(s.witnesses[i].size()) / static_cast<double>(box.cell_count());
    cert.min_ratio = std::min(cert.min_ratio, ratio);
    if (ratio < s.eta * (1.0 - 1e-12)) return fail("witness smaller than eta|Q|");
  }
  return cert;
}

SparseFamily build_sparse_stopping(const Lattice& lat, const std::vector<StoppingRule>& rules, double lambda) {
  const double k = static_cast<double>(rules.size());
  if (rules.empty()) throw PreconditionError("at least one stopping rule is required");
  if (!(lambda > k)) throw PreconditionError("threshold ratio must exceed the number of stopping rules");
  const Grid& g = lat.grid();

  std::vector<std::unique_ptr<PrefixTable>> fixed(rules.size());
  for (std::size_t i = 0; i < rules.size(); ++i) {
    if (!rules[i].depends_on_cube) fixed[i] = std::make_unique<PrefixTable>(rules[i].density(CellBox{}));
  }

  SparseFamily fam;
  fam.grid = g;
  fam.shift_id = lat.shift_id();
  fam.eta = 1.0 - k / lambda;

  std::vector<char> taken(g.cell_count(), 0);
  std::vector<DyadicCube> todo = lat.roots();
  while (!todo.empty()) {
    const DyadicCube q = todo.back();
    todo.pop_back();
    const CellBox qbox = lat.box(q);

    std::vector<std::function<double(const CellBox&)>> avg(rules.size());
    std::vector<std::unique_ptr<BoxSums>> local(rules.size());
    for (std::size_t i = 0; i < rules.size(); ++i) {
      if (fixed[i]) {
        const PrefixTable* t = fixed[i].get();
        avg[i] = [t](const CellBox& b) { return t->average(b); };
      } else {
        const GridFunction d = rules[i].density(qbox);
        local[i] = std::make_unique<BoxSums>(g, qbox, [&d](std::size_t c) { return d[c]; });
        const BoxSums* t = local[i].get();
        avg[i] = [t](const CellBox& b) { return t->average(b); };
      }
    }
    std::vector<double> threshold(rules.size());
    for (std::size_t i = 0; i < rules.size(); ++i) threshold[i] = lambda * avg[i](qbox);

    std::vector<DyadicCube> selected;
    std::vector<DyadicCube> stack = lat.children(q);
    while (!stack.empty()) {
      const DyadicCube r = stack.back();
      stack.pop_back();
      const CellBox rbox = lat.box(r);
      bool stop = false;
      for (std::size_t i = 0; i < rules.size() && !stop; ++i) stop = avg[i](rbox) > threshold[i];
      if (stop) {
        selected.push_back(r);
      } else {
        for (const DyadicCube& c : lat.children(r)) stack.push_back(c);
      }
    }

    for (const DyadicCube& r : selected) for_each_cell(g, lat.box(r), [&](std::size_t c) { taken[c] = 1; });
    fam.cubes.push_back(q);
    fam.witnesses.push_back(free_cells(g, qbox, taken));
    for (const DyadicCube& r : selected) for_each_cell(g, lat.box(r), [&](std::size_t c) { taken[c] = 0; });
    todo.insert(todo.end(), selected.begin(), selected.end());
  }
  sort_family(fam);
  return fam;
}

SparseFamily build_sparse_cz(const GridFunction& f, const Lattice& lat, double lambda) {
  if (!(lambda > 1.0)) throw PreconditionError("threshold ratio must exceed 1");
  const GridFunction af = f.abs();
  return build_sparse_stopping(lat, {StoppingRule{[af](const CellBox&) { return af; }, false}}, lambda);
}

// ---------------------------------------------------------------------------

double pointwise_oscillation_ratio(const SparseFamily& s, const GridFunction& b, double c, DyadicCube* worst,
                                   std::size_t* worst_cell) {
  const Grid& g = s.grid;
  const Lattice lat = s.lattice();
  const PrefixTable tb(b);
  const std::size_t m = s.cubes.size();
  std::vector<CellBox> boxes(m);
  std::vector<double> osc(m), avg(m);
  std::vector<std::vector<std::size_t>> chain(g.cell_count());
  double bmax = 0.0;
  for (double v : b.values()) bmax = std::max(bmax, std::abs(v));
  for (std::size_t i = 0; i < m; ++i) {
    boxes[i] = lat.box(s.cubes[i]);
    osc[i] = mean_oscillation(tb, boxes[i]);
    avg[i] = tb.average(boxes[i]);
    for_each_cell(g, boxes[i], [&](std::size_t x) { chain[x].push_back(i); });
  }
  const double zero = 1e-13 * (1.0 + bmax);
  double best = 0.0;
  for (std::size_t x = 0; x < chain.size(); ++x) {
    auto& ch = chain[x];
    std::sort(ch.begin(), ch.end(), [&](std::size_t a, std::size_t bb) { return s.cubes[a].level > s.cubes[bb].level; });
    double suffix = 0.0;  // running sum from the finest cube upwards
    for (std::size_t i : ch) {
      suffix += osc[i];
      const double lhs = std::abs(b[x] - avg[i]);
      double ratio;
      if (lhs <= zero) {
        ratio = 0.0;
      } else if (suffix <= 0.0) {
        ratio = std::numeric_limits<double>::infinity();
      } else {
        ratio = lhs / (c * suffix);
      }
      if (ratio > best) {
        best = ratio;
        if (worst) *worst = s.cubes[i];
        if (worst_cell) *worst_cell = x;
      }
    }
  }
  return best;
}

AugmentResult augment_sparse(const SparseFamily& s, const GridFunction& b) {
  const Grid& g = s.grid;
  if (!(b.grid() == g)) throw PreconditionError("symbol and family live on different grids");
  const Lattice lat = s.lattice();
  const PrefixTable tb(b);
  const std::set<DyadicCube> in_s(s.cubes.begin(), s.cubes.end());

  std::vector<DyadicCube> todo;
  for (const DyadicCube& q : s.cubes) {
    DyadicCube up = q;
    bool covered = false;
    while (lat.parent(up, up)) {
      if (in_s.count(up)) {
        covered = true;
        break;
      }
    }
    if (!covered) todo.push_back(q);
  }

  std::set<DyadicCube> result;
  while (!todo.empty()) {
    const DyadicCube q = todo.back();
    todo.pop_back();
    if (!result.insert(q).second) continue;
    const CellBox qbox = lat.box(q);
    const double bq = tb.average(qbox);
    const double omega = mean_oscillation(tb, qbox);
    const BoxSums dev(g, qbox, [&](std::size_t c) { return std::abs(b[c] - bq); });

    std::vector<DyadicCube> stack = lat.children(q);
    while (!stack.empty()) {
      const DyadicCube r = stack.back();
      stack.pop_back();
      if (in_s.count(r) || dev.average(lat.box(r)) > 2.0 * omega) {
        todo.push_back(r);
      } else {
        for (const DyadicCube& c : lat.children(r)) stack.push_back(c);
      }
    }
  }

  AugmentResult out;
  SparseFamily& fam = out.family;
  fam.grid = g;
  fam.shift_id = s.shift_id;
  fam.eta = s.eta / (2.0 * (1.0 + s.eta));
  fam.cubes.assign(result.begin(), result.end());

  // Witnesses from the finest cubes upwards. Ancestors contain a cube whole,
  // so only the number of free cells matters, not which ones are taken.
  std::vector<std::size_t> order(fam.cubes.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t c) { return fam.cubes[a].level > fam.cubes[c].level; });
  fam.witnesses.resize(fam.cubes.size());
  std::vector<char> taken(g.cell_count(), 0);
  for (std::size_t i : order) {
    const CellBox box = lat.box(fam.cubes[i]);
    const auto need = static_cast<std::size_t>(std::ceil(fam.eta * static_cast<double>(box.cell_count()) - 1e-9));
    std::vector<std::size_t> avail = free_cells(g, box, taken);
    if (avail.size() < need)
      throw InvariantViolation("augmented family admits no witness of size eta|Q| at " + to_string(fam.cubes[i]));
    avail.resize(need);
    for (std::size_t c : avail) taken[c] = 1;
    fam.witnesses[i] = std::move(avail);
  }
  sort_family(fam);

  const double c = std::ldexp(1.0, g.dim() + 2);
  out.max_ratio = pointwise_oscillation_ratio(fam, b, c, &out.worst_cube, &out.worst_cell);
  if (out.max_ratio > 1.0)
    throw InvariantViolation("pointwise oscillation bound fails at " + to_string(out.worst_cube) + ", cell " +
                             std::to_string(out.worst_cell));
  return out;
}

// ---------------------------------------------------------------------------

namespace {

GridFunction accumulate(const SparseFamily& s, const std::function<void(const CellBox&, std::vector<double>&)>& add) {
  std::vector<double> out(s.grid.cell_count(), 0.0);
  const Lattice lat = s.lattice();
  for (const DyadicCube& q : s.cubes) add(lat.box(q), out);
  return GridFunction(s.grid, std::move(out), "Tf");
}

}  // namespace

GridFunction apply_T_S(const GridFunction& f, const SparseFamily& s) {
  const PrefixTable t(f.abs());
  return accumulate(s, [&](const CellBox& q, std::vector<double>& out) {
    const double a = t.average(q);
    for_each_cell(s.grid, q, [&](std::size_t x) { out[x] += a; });
  });
}

GridFunction apply_T_S_alpha(const GridFunction& f, const SparseFamily& s, double alpha) {
  if (!(alpha > 0.0 && alpha < s.grid.dim())) throw PreconditionError("alpha must lie in (0, n)");
  const PrefixTable t(f.abs());
  return accumulate(s, [&](const CellBox& q, std::vector<double>& out) {
    const double a = side_pow(s.grid, q, alpha) * t.average(q);
    for_each_cell(s.grid, q, [&](std::size_t x) { out[x] += a; });
  });
}

GridFunction apply_T_S_b_alpha(const GridFunction& f, const GridFunction& b, const SparseFamily& s, double alpha,
                               bool adjoint) {
  if (!(alpha > 0.0 && alpha < s.grid.dim())) throw PreconditionError("alpha must lie in (0, n)");
  const PrefixTable tb(b);
  const PrefixTable tf(f);
  return accumulate(s, [&](const CellBox& q, std::vector<double>& out) {
    const double scale = side_pow(s.grid, q, alpha);
    const double bq = tb.average(q);
    if (!adjoint) {
      const double a = scale * tf.average(q);
      for_each_cell(s.grid, q, [&](std::size_t x) { out[x] += std::abs(b[x] - bq) * a; });
    } else {
      long double acc = 0.0L;
      for_each_cell(s.grid, q, [&](std::size_t y) { acc += std::abs(b[y] - bq) * f[y]; });
      const double a = scale * static_cast<double>(acc / static_cast<long double>(q.cell_count()));
      for_each_cell(s.grid, q, [&](std::size_t x) { out[x] += a; });
    }
  });
}

Eigen::MatrixXd sparse_operator_matrix(const SparseFamily& s, double alpha, SparseKind kind, const GridFunction* b,
                                       const std::vector<std::size_t>& subset) {
  const Grid& g = s.grid;
  if (kind != SparseKind::kPlain && b == nullptr) throw PreconditionError("bracket sparse operator needs a symbol");
  const auto n = static_cast<Eigen::Index>(g.cell_count());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  const Lattice lat = s.lattice();
  std::unique_ptr<PrefixTable> tb;
  if (b) tb = std::make_unique<PrefixTable>(*b);
  auto add = [&](std::size_t i) {
    const CellBox q = lat.box(s.cubes[i]);
    const double coef = side_pow(g, q, alpha - g.dim()) * g.cell_volume();
    const std::vector<std::size_t> cells = cells_of(g, q);
    const double bq = tb ? tb->average(q) : 0.0;
    for (std::size_t y : cells) {
      const double cy = kind == SparseKind::kBracketAdjoint ? coef * std::abs((*b)[y] - bq) : coef;
      for (std::size_t x : cells) {
        const double cx = kind == SparseKind::kBracket ? std::abs((*b)[x] - bq) : 1.0;
        m(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)) += cy * cx;
      }
    }
  };
  if (subset.empty()) {
    for (std::size_t i = 0; i < s.cubes.size(); ++i) add(i);
  } else {
    for (std::size_t i : subset) add(i);
  }
  return m;
}

// ---------------------------------------------------------------------------

std::vector<std::size_t> TruncationSplit::tails() const {
  std::vector<std::size_t> out;
  out.insert(out.end(), tail_i.begin(), tail_i.end());
  out.insert(out.end(), tail_ii.begin(), tail_ii.end());
  out.insert(out.end(), tail_iii.begin(), tail_iii.end());
  std::sort(out.begin(), out.end());
  return out;
}

TruncationSplit split_truncation(const SparseFamily& s, const DyadicCube& q_n, double delta) {
  const Lattice lat = s.lattice();
  if (q_n.shift_id != s.shift_id || !lat.is_member(q_n))
    throw PreconditionError("Q_N is not a cube of the family's lattice: " + to_string(q_n));
  const double n_side = std::ldexp(1.0, -q_n.level);
  if (!(delta < n_side)) throw PreconditionError("delta must be smaller than the side of Q_N");
  const CellBox qn = lat.box(q_n);
  TruncationSplit out;
  out.label.resize(s.cubes.size());
  for (std::size_t i = 0; i < s.cubes.size(); ++i) {
    const CellBox q = lat.box(s.cubes[i]);
    TruncationClass c;
    if (q.contains(qn) && !(q == qn)) {
      c = TruncationClass::kTailI;
      out.tail_i.push_back(i);
    } else if (q.disjoint(qn)) {
      c = TruncationClass::kTailII;
      out.tail_ii.push_back(i);
    } else if (std::ldexp(1.0, -s.cubes[i].level) < delta) {
      c = TruncationClass::kTailIII;
      out.tail_iii.push_back(i);
    } else {
      c = TruncationClass::kFinite;
      out.finite.push_back(i);
    }
    out.label[i] = c;
  }
  return out;
}

const char* to_string(TruncationClass c) {
  switch (c) {
    case TruncationClass::kFinite: return "IV";
    case TruncationClass::kTailI: return "I";
    case TruncationClass::kTailII: return "II";
    case TruncationClass::kTailIII: return "III";
  }
  return "?";
}

// ---------------------------------------------------------------------------

nlohmann::json sparse_to_json(const SparseFamily& s) {
  nlohmann::json cubes = nlohmann::json::array();
  for (std::size_t i = 0; i < s.cubes.size(); ++i) {
    nlohmann::json ranges = nlohmann::json::array();
    const auto& w = s.witnesses[i];
    for (std::size_t k = 0; k < w.size();) {
      std::size_t e = k + 1;
      while (e < w.size() && w[e] == w[e - 1] + 1) ++e;
      ranges.push_back({w[k], w[e - 1] + 1});
      k = e;
    }
    const DyadicCube& q = s.cubes[i];
    nlohmann::json idx = nlohmann::json::array({q.index[0]});
    if (s.grid.dim() == 2) idx.push_back(q.index[1]);
    cubes.push_back({{"shift", q.shift_id}, {"level", q.level}, {"index", idx}, {"witness_cell_ranges", ranges}});
  }
  return {{"schema", kSparseSchema}, {"n", s.grid.dim()},     {"L", s.grid.depth()},
          {"shift", s.shift_id},     {"eta", s.eta},          {"cubes", cubes}};
}

SparseFamily sparse_from_json(const nlohmann::json& j) {
  try {
    if (j.value("schema", std::string{}) != kSparseSchema) throw PreconditionError("not a sparse family file");
    SparseFamily s;
    s.grid = Grid(j.at("n").get<int>(), j.at("L").get<int>());
    s.shift_id = j.at("shift").get<int>();
    s.eta = j.at("eta").get<double>();
    for (const auto& c : j.at("cubes")) {
      DyadicCube q;
      q.shift_id = c.at("shift").get<int>();
      q.level = c.at("level").get<int>();
      const auto& idx = c.at("index");
      q.index = {idx.at(0).get<Index>(), idx.size() > 1 ? idx.at(1).get<Index>() : 0};
      std::vector<std::size_t> cells;
      for (const auto& r : c.at("witness_cell_ranges")) {
        const auto a = r.at(0).get<std::size_t>();
        const auto e = r.at(1).get<std::size_t>();
        for (std::size_t k = a; k < e; ++k) cells.push_back(k);
      }
      s.cubes.push_back(q);
      s.witnesses.push_back(std::move(cells));
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw PreconditionError(std::string("malformed sparse family: ") + e.what());
  }
}

}  // namespace bloomvmo
