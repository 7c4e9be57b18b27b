#include "bloomvmo/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "bloomvmo/errors.hpp"

namespace bloomvmo {

namespace {

const std::map<std::string, OperatorName>& operator_names() {
  static const std::map<std::string, OperatorName> names = {
      {"M_alpha", OperatorName::kMAlpha},
      {"M_alpha_b", OperatorName::kMAlphaB},
      {"bracket_b_M_alpha", OperatorName::kBracketBMAlpha},
      {"I_alpha", OperatorName::kIAlpha},
      {"bracket_b_I_alpha", OperatorName::kBracketBIAlpha},
      {"T_S", OperatorName::kTS},
      {"T_S_alpha", OperatorName::kTSAlpha},
      {"T_S_b_alpha", OperatorName::kTSBAlpha},
      {"T_S_b_alpha_star", OperatorName::kTSBAlphaStar},
  };
  return names;
}

nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

nlohmann::json box_json(const CellBox& b) {
  return {{"lo", {b.lo[0], b.lo[1]}}, {"hi", {b.hi[0], b.hi[1]}}};
}

}  // namespace

OperatorName parse_operator(const std::string& name) {
  const auto it = operator_names().find(name);
  if (it == operator_names().end()) throw UnknownNameError("unknown operator '" + name + "'");
  return it->second;
}

const char* to_string(OperatorName op) {
  for (const auto& [k, v] : operator_names()) {
    if (v == op) return k.c_str();
  }
  return "?";
}

FailingCondition parse_condition(const std::string& name) {
  if (name == "small_scale") return FailingCondition::kSmallScale;
  if (name == "large_scale") return FailingCondition::kLargeScale;
  if (name == "far_away") return FailingCondition::kFarAway;
  throw UnknownNameError("unknown failing condition '" + name + "'");
}

const char* to_string(FailingCondition c) {
  switch (c) {
    case FailingCondition::kSmallScale: return "small_scale";
    case FailingCondition::kLargeScale: return "large_scale";
    case FailingCondition::kFarAway: return "far_away";
  }
  return "?";
}

// ---------------------------------------------------------------------------

std::vector<ProfileSetting> default_ladder() {
  return {{1.0 / 2, 3, 1.0 / 16}, {1.0 / 4, 2, 1.0 / 32}, {1.0 / 8, 1, 1.0 / 64}, {1.0 / 16, 0, 1.0 / 128}};
}

SparseFamily profile_family(const Grid& g, const ProfileOptions& opts) {
  std::vector<double> v(g.cell_count(), 0.0);
  for (const auto& c : opts.reference_centers) {
    const Weight w = power_weight(g, opts.reference_exponent, c);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += w[i];
  }
  return build_sparse_cz(GridFunction(g, std::move(v), "reference"), Lattice(g, 0), opts.lambda);
}

CompactnessProfile compactness_profile(OperatorName op, const GridFunction& b, const BloomTriple& t,
                                       const std::vector<ProfileSetting>& settings, const ProfileOptions& opts) {
  if (op != OperatorName::kTSBAlphaStar && op != OperatorName::kMAlphaB && op != OperatorName::kBracketBIAlpha)
    throw PreconditionError(std::string("compactness profile does not support operator ") + to_string(op));
  const Grid& g = b.grid();
  if (!(t.lambda1().grid() == g)) throw PreconditionError("symbol and weights live on different grids");
  for (const ProfileSetting& s : settings) {
    if (!(s.delta < std::ldexp(1.0, -s.qn_level))) throw PreconditionError("profile setting needs delta < side(Q_N)");
  }

  CompactnessProfile prof;
  prof.op = op;
  prof.family = profile_family(g, opts);
  const SparseFamily& fam = prof.family;
  const Lattice lat = fam.lattice();
  const NormSpaces spaces = NormSpaces::from_triple(t);
  const PrefixTable tb(b);

  std::vector<double> osc(fam.size());
  for (std::size_t i = 0; i < fam.size(); ++i) osc[i] = mean_oscillation(tb, lat.box(fam.cubes[i]), t.nu());

  const Index n = g.per_axis();
  const Coord x0cell{std::clamp<Index>(static_cast<Index>(std::floor(opts.x0[0] * n)), 0, n - 1),
                     g.dim() == 2 ? std::clamp<Index>(static_cast<Index>(std::floor(opts.x0[1] * n)), 0, n - 1) : 0};

  for (const ProfileSetting& s : settings) {
    ProfileEntry e;
    e.setting = s;
    e.n_side = std::ldexp(1.0, -s.qn_level);
    if (!lat.cube_containing(x0cell, s.qn_level, e.q_n)) throw PreconditionError("Q_N is not a lattice cube");
    const TruncationSplit split = split_truncation(fam, e.q_n, s.delta);
    e.count_i = split.tail_i.size();
    e.count_ii = split.tail_ii.size();
    e.count_iii = split.tail_iii.size();
    e.finite_count = split.finite.size();
    for (std::size_t i : split.tail_iii) e.max_side_iii = std::max(e.max_side_iii, std::ldexp(1.0, -fam.cubes[i].level));
    const std::vector<std::size_t> tails = split.tails();
    for (std::size_t i : tails) e.tail_oscillation = std::max(e.tail_oscillation, osc[i]);

    auto matrix_for = [&](const std::vector<std::size_t>& subset) {
      Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(g.cell_count()),
                                                static_cast<Eigen::Index>(g.cell_count()));
      if (subset.empty()) return m;
      m = sparse_operator_matrix(fam, t.alpha(), SparseKind::kBracketAdjoint, &b, subset);
      if (op != OperatorName::kTSBAlphaStar) m += sparse_operator_matrix(fam, t.alpha(), SparseKind::kBracket, &b, subset);
      return m;
    };
    e.tail = boyd_norm(matrix_for(tails), spaces, opts.boyd);
    if (opts.compute_rank && !split.finite.empty()) {
      Eigen::MatrixXd chi = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(g.cell_count()),
                                                  static_cast<Eigen::Index>(split.finite.size()));
      for (std::size_t k = 0; k < split.finite.size(); ++k) {
        for_each_cell(g, lat.box(fam.cubes[split.finite[k]]),
                      [&](std::size_t c) { chi(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(k)) = 1.0; });
      }
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> span(chi);
      span.setThreshold(1e-10);
      e.finite_rank = static_cast<std::size_t>(span.rank());
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(matrix_for(split.finite));
      qr.setThreshold(1e-10);
      e.operator_rank = static_cast<std::size_t>(qr.rank());
    }
    prof.entries.push_back(std::move(e));
  }

  for (std::size_t k = 1; k < prof.entries.size(); ++k) {
    if (prof.entries[k].tail.lower > prof.entries[k - 1].tail.lower * 1.05) prof.lower_monotone = false;
  }
  if (!prof.entries.empty()) {
    const double first = prof.entries.front().tail.lower;
    const double last = prof.entries.back().tail.lower;
    prof.decay_factor = last > 0.0 ? first / last : (first > 0.0 ? std::numeric_limits<double>::infinity() : 1.0);
  }
  return prof;
}

// ---------------------------------------------------------------------------

namespace {

struct Candidate {
  DyadicCube cube;
  CellBox box;
  double osc = 0.0;
  PartnerCube partner;
};

}  // namespace

FalsifierReport falsify(const GridFunction& b, const BloomTriple& t, OperatorName op, FailingCondition condition,
                        const LatticeSet& lattices, const FalsifierOptions& opts) {
  if (op != OperatorName::kMAlphaB && op != OperatorName::kBracketBIAlpha)
    throw PreconditionError(std::string("falsifier does not support operator ") + to_string(op));
  const Grid& g = b.grid();
  const Weight& nu = t.nu();
  FalsifierReport rep;
  rep.op = op;
  rep.condition = condition;

  const VmoModuli mod = vmo_moduli(b, nu, lattices, opts.x0);
  rep.curve = condition == FailingCondition::kSmallScale   ? mod.small_scale
              : condition == FailingCondition::kLargeScale ? mod.large_scale
                                                           : mod.far_away;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const ScalePoint& pt : rep.curve) {
    if (pt.empty) continue;
    lo = std::min(lo, pt.value);
    hi = std::max(hi, pt.value);
  }
  if (!(hi > 0.0) || !(lo > 0.0) || lo < 0.5 * hi) throw PreconditionError("b appears VMO at grid scales");
  rep.epsilon0 = lo;

  // Best partnered cube per level, first in enumeration order on ties.
  const PrefixTable tb(b);
  const CellBox central = centred_box(g, opts.x0, 0.5);
  std::map<int, Candidate> best;
  for (const Lattice& lat : lattices) {
    for_each_cube(lat, {1, -1, {}}, [&](const DyadicCube& q, const CellBox& box) {
      if (condition == FailingCondition::kFarAway && !box.disjoint(central)) return;
      const double o = mean_oscillation(tb, box, nu);
      if (o < rep.epsilon0 * (1.0 - 1e-12)) return;
      auto it = best.find(q.level);
      if (it != best.end() && it->second.osc >= o) return;
      try {
        const PartnerCube pc = partner_ball(g, box, opts.partner_factor, t.alpha());
        best[q.level] = Candidate{q, box, o, pc};
      } catch (const DomainError&) {
      }
    });
  }

  std::vector<Candidate> chosen;
  if (condition == FailingCondition::kSmallScale) {
    for (auto it = best.rbegin(); it != best.rend() && static_cast<int>(chosen.size()) < opts.max_scales; ++it) {
      if (chosen.empty() || chosen.back().cube.level - it->first >= 2) chosen.push_back(it->second);
    }
    std::reverse(chosen.begin(), chosen.end());
  } else {
    for (auto it = best.begin(); it != best.end() && static_cast<int>(chosen.size()) < opts.max_scales; ++it) {
      if (chosen.empty() || it->first - chosen.back().cube.level >= 2) chosen.push_back(it->second);
    }
  }
  if (chosen.empty()) throw PreconditionError("no admissible oscillating cube with a partner on this grid");
  if (chosen.size() < 3) {
    rep.partial = true;
    rep.warning = "only " + std::to_string(chosen.size()) + " admissible scales on this grid";
  }

  std::unique_ptr<MaximalCommutator> mb;
  KernelMatrix kernel;
  if (op == OperatorName::kMAlphaB) {
    mb = std::make_unique<MaximalCommutator>(b, t.alpha(), lattices);
  } else {
    kernel = commutator_kernel(riesz_kernel(g, t.alpha()), b);
  }
  auto apply_op = [&](const std::vector<double>& f) -> std::vector<double> {
    if (mb) return mb->evaluate(f);
    return apply_kernel(kernel, GridFunction(g, f)).values();
  };

  const double vol = g.cell_volume();
  const std::size_t m = chosen.size();
  for (std::size_t j = 0; j < m; ++j) {
    const Candidate& c = chosen[j];
    FalsifierStep st;
    st.cube = c.cube;
    st.box = c.box;
    st.partner = c.partner.partner;
    st.radius = c.partner.radius;
    st.oscillation = c.osc;
    st.partner_gap = c.partner.gap;
    const std::vector<std::size_t> tilde = cells_of(g, st.partner);
    st.median = median_value(b, tilde);
    for (std::size_t y : tilde) {
      if (b[y] <= st.median) st.f1.push_back(y);
      if (b[y] >= st.median) st.f2.push_back(y);
    }
    for_each_cell(g, st.box, [&](std::size_t x) { (b[x] >= st.median ? st.e1 : st.e2).push_back(x); });

    auto in_later = [&](std::size_t y) {
      const Coord cy = g.coords(y);
      for (std::size_t l = j + 1; l < m; ++l) {
        if (chosen[l].partner.partner.contains_cell(cy)) return true;
      }
      return false;
    };
    for (std::size_t y : st.f1) {
      if (!in_later(y)) st.f1_tilde.push_back(y);
    }
    for (std::size_t y : st.f2) {
      if (!in_later(y)) st.f2_tilde.push_back(y);
    }
    st.f_tilde_fraction = static_cast<double>(std::min(st.f1_tilde.size(), st.f2_tilde.size())) /
                          static_cast<double>(tilde.size());
    if (st.f_tilde_fraction < 1.0 / 6.0) rep.measure_ok = false;

    for (std::size_t x : st.e1) {
      for (std::size_t y : st.f1) {
        if (!(b[x] - b[y] >= 0.0) || std::abs(b[x] - b[y]) < std::abs(b[x] - st.median)) rep.sign_ok = false;
      }
    }
    for (std::size_t x : st.e2) {
      for (std::size_t y : st.f2) {
        if (!(b[x] - b[y] < 0.0) || std::abs(b[x] - b[y]) < std::abs(b[x] - st.median)) rep.sign_ok = false;
      }
    }

    long double dev1 = 0.0L;
    for (std::size_t x : st.e1) dev1 += std::abs(b[x] - st.median);
    const double i1 = 2.0 / nu.integral(st.box) * static_cast<double>(dev1) * vol;
    st.branch = i1 >= rep.epsilon0 / 2.0 ? 1 : 2;
    const std::vector<std::size_t>& support = st.branch == 1 ? st.f1_tilde : st.f2_tilde;
    const std::vector<std::size_t>& target = st.branch == 1 ? st.e1 : st.e2;

    const double scale = std::pow(t.lambda1().integral(st.box, t.p()), 1.0 / t.p());
    st.test_function.assign(g.cell_count(), 0.0);
    for (std::size_t y : support) st.test_function[y] = 1.0 / scale;
    st.test_norm = weighted_norm(st.test_function, t.lambda1(), t.p());
    const std::vector<double> image = apply_op(st.test_function);
    st.image_norm = weighted_norm(image, t.lambda2(), t.q());
    long double acc = 0.0L;
    for (std::size_t x : target) acc += std::abs(image[x]);
    st.c_j = std::pow(t.lambda2().integral(st.box, -t.q_conj()), -1.0 / t.q_conj()) * static_cast<double>(acc) * vol;
    rep.steps.push_back(std::move(st));
  }

  std::vector<std::vector<double>> images;
  std::vector<long long> owner(g.cell_count(), -1);
  rep.min_image_norm = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < m; ++j) {
    const FalsifierStep& st = rep.steps[j];
    if (j + 1 < m && st.radius < 4.0 * rep.steps[j + 1].radius) rep.decay_ok = false;
    for (std::size_t y = 0; y < st.test_function.size(); ++y) {
      if (st.test_function[y] == 0.0) continue;
      if (owner[y] >= 0) rep.disjoint_ok = false;
      owner[y] = static_cast<long long>(j);
    }
    rep.norm_constant = std::max({rep.norm_constant, st.test_norm, 1.0 / st.test_norm});
    rep.min_image_norm = std::min(rep.min_image_norm, st.image_norm);
    images.push_back(apply_op(st.test_function));
  }
  rep.separation.assign(m, std::vector<double>(m, 0.0));
  rep.min_separation = m > 1 ? std::numeric_limits<double>::infinity() : 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t k = j + 1; k < m; ++k) {
      std::vector<double> d(g.cell_count());
      for (std::size_t x = 0; x < d.size(); ++x) d[x] = images[j][x] - images[k][x];
      const double s = weighted_norm(d, t.lambda2(), t.q());
      rep.separation[j][k] = rep.separation[k][j] = s;
      rep.min_separation = std::min(rep.min_separation, s);
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------

nlohmann::json cube_json(const DyadicCube& q) {
  return {{"shift", q.shift_id}, {"level", q.level}, {"index", {q.index[0], q.index[1]}}};
}

nlohmann::json to_json(const NormBracket& b, bool with_witness) {
  nlohmann::json j = {{"lower", b.lower},
                      {"upper", b.upper},
                      {"witness_ratio", b.witness_ratio},
                      {"iterations", b.iterations},
                      {"upper_kind", b.upper_kind},
                      {"log", b.log}};
  if (with_witness) j["witness"] = b.witness;
  return j;
}

nlohmann::json to_json(const CompactnessProfile& p) {
  nlohmann::json entries = nlohmann::json::array();
  for (const ProfileEntry& e : p.entries) {
    entries.push_back({{"epsilon", e.setting.epsilon},
                       {"n_side", e.n_side},
                       {"delta", e.setting.delta},
                       {"q_n", cube_json(e.q_n)},
                       {"class_counts", {{"I", e.count_i}, {"II", e.count_ii}, {"III", e.count_iii}, {"IV", e.finite_count}}},
                       {"finite_rank", e.finite_rank},
                       {"operator_rank", e.operator_rank},
                       {"max_side_iii", e.max_side_iii},
                       {"tail_oscillation", e.tail_oscillation},
                       {"tail", to_json(e.tail)}});
  }
  return {{"operator", to_string(p.op)},
          {"family_size", p.family.size()},
          {"family_eta", p.family.eta},
          {"entries", entries},
          {"lower_monotone", p.lower_monotone},
          {"decay_factor", finite_or_null(p.decay_factor)}};
}

nlohmann::json to_json(const FalsifierReport& r) {
  nlohmann::json steps = nlohmann::json::array();
  for (const FalsifierStep& s : r.steps) {
    steps.push_back({{"cube", cube_json(s.cube)},
                     {"box", box_json(s.box)},
                     {"partner", box_json(s.partner)},
                     {"radius", s.radius},
                     {"oscillation", s.oscillation},
                     {"median", s.median},
                     {"branch", s.branch},
                     {"sizes",
                      {{"E1", s.e1.size()}, {"E2", s.e2.size()}, {"F1", s.f1.size()}, {"F2", s.f2.size()},
                       {"F1_tilde", s.f1_tilde.size()}, {"F2_tilde", s.f2_tilde.size()}}},
                     {"f_tilde_fraction", s.f_tilde_fraction},
                     {"test_norm", s.test_norm},
                     {"image_norm", s.image_norm},
                     {"c_j", s.c_j},
                     {"partner_gap", s.partner_gap}});
  }
  nlohmann::json curve = nlohmann::json::array();
  for (const ScalePoint& pt : r.curve) {
    curve.push_back({{"level", pt.level}, {"scale", pt.scale}, {"value", pt.value}, {"empty", pt.empty}});
  }
  return {{"operator", to_string(r.op)},
          {"condition", to_string(r.condition)},
          {"epsilon0", r.epsilon0},
          {"curve", curve},
          {"steps", steps},
          {"separation", r.separation},
          {"min_image_norm", finite_or_null(r.min_image_norm)},
          {"min_separation", finite_or_null(r.min_separation)},
          {"norm_constant", r.norm_constant},
          {"invariants",
           {{"decay", r.decay_ok}, {"measure", r.measure_ok}, {"disjoint", r.disjoint_ok}, {"sign", r.sign_ok}}},
          {"partial", r.partial},
          {"warning", r.warning}};
}

}  // namespace bloomvmo
