#include "bloomvmo/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <set>

#include "bloomvmo/diagnostics.hpp"
#include "bloomvmo/errors.hpp"
#include "bloomvmo/io.hpp"
#include "bloomvmo/norms.hpp"
#include "bloomvmo/operators.hpp"
#include "bloomvmo/oscillation.hpp"
#include "bloomvmo/sparse.hpp"
#include "bloomvmo/symbols.hpp"
#include "bloomvmo/weights.hpp"

namespace bloomvmo {

namespace fs = std::filesystem;
using nlohmann::json;

const std::vector<std::string>& diagnostic_names() {
  static const std::vector<std::string> names = {"gen-weight", "ap-const", "bmo",    "vmo-moduli",
                                                 "sparse-build", "sparse-verify", "sparse-apply", "op-apply",
                                                 "norm",       "dominate", "profile", "falsify"};
  return names;
}

namespace {

const json kUnitWeight = {{"kind", "constant"}, {"c", 1.0}};

void require_object(const json& j, const char* what) {
  if (!j.is_object()) throw PreconditionError(std::string(what) + " must be a JSON object");
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw PreconditionError(std::string("config field '") + key + "' has the wrong type");
  }
}

json with_seed(json spec, std::uint64_t seed) {
  if (spec.is_object() && spec.value("kind", std::string{}) == "random" && !spec.contains("seed")) spec["seed"] = seed;
  return spec;
}

// Python-style repr for the terminal: 1 prints as 1.0.
std::string headline_number(double v) {
  std::string s = format_double(v);
  if (std::isfinite(v) && s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

std::array<double, 2> point_or(const json& settings, const char* key, std::array<double, 2> fallback) {
  if (!settings.contains(key)) return fallback;
  const json& v = settings.at(key);
  if (v.is_number()) return {v.get<double>(), v.get<double>()};
  if (v.is_array() && v.size() == 2) return {v[0].get<double>(), v[1].get<double>()};
  throw PreconditionError(std::string("setting '") + key + "' must be a number or a pair");
}

json curve_json(const std::vector<ScalePoint>& curve) {
  json out = json::array();
  for (const ScalePoint& pt : curve) {
    out.push_back({{"level", pt.level}, {"scale", pt.scale}, {"value", pt.value}, {"empty", pt.empty}});
  }
  return out;
}

// Everything a diagnostic needs, built lazily from the config.
class Context {
 public:
  Context(const ExperimentConfig& cfg, fs::path out) : cfg_(cfg), out_(std::move(out)), grid_(cfg.n, cfg.depth) {}

  const ExperimentConfig& cfg() const { return cfg_; }
  const Grid& grid() const { return grid_; }
  const json& settings() const { return cfg_.settings; }

  BloomTriple triple() const {
    const json& t = cfg_.triple;
    return BloomTriple::make(t.at("alpha").get<double>(), t.at("p").get<double>(), make_weight(grid_, t.at("lambda1")),
                             make_weight(grid_, t.at("lambda2")));
  }
  double alpha() const { return cfg_.triple.at("alpha").get<double>(); }

  GridFunction symbol() const { return make_symbol(grid_, cfg_.symbol); }

  GridFunction input() const {
    if (cfg_.input.contains("path")) {
      GridFunction f = read_grid(cfg_.input.at("path").get<std::string>(), cfg_.n, cfg_.depth);
      if (!(f.grid() == grid_)) throw PreconditionError("input grid does not match the configured grid");
      return f;
    }
    GridFunction f = make_symbol(grid_, cfg_.input);
    f.set_role("f");
    return f;
  }

  LatticeSet lattices() const {
    const json& l = cfg_.settings.contains("lattices") ? cfg_.settings.at("lattices") : json("all");
    if (l.is_string()) {
      if (l == "all") return LatticeSet::all_shifts(grid_);
      if (l == "standard") return LatticeSet::standard(grid_);
      throw UnknownNameError("unknown lattice set '" + l.get<std::string>() + "'");
    }
    const std::vector<int> ids = l.get<std::vector<int>>();
    return LatticeSet::from_ids(grid_, ids);
  }

  json lattice_id() const { return cfg_.settings.contains("lattices") ? cfg_.settings.at("lattices") : json("all"); }

  // Family from settings.family (a path) or the CZ family of the input.
  SparseFamily family() const {
    if (cfg_.settings.contains("family")) {
      SparseFamily s = sparse_from_json(read_json(cfg_.settings.at("family").get<std::string>()));
      if (!(s.grid == grid_)) throw PreconditionError("family grid does not match the configured grid");
      return s;
    }
    return build_sparse_cz(input(), Lattice(grid_, get_or(settings(), "shift", 0)), get_or(settings(), "lambda", 2.0));
  }

  json family_id(const SparseFamily& s) const {
    json id = {{"shift", s.shift_id}, {"size", s.size()}, {"eta", s.eta}};
    if (cfg_.settings.contains("family")) {
      id["source"] = "file";
    } else {
      id["source"] = "cz";
      id["lambda"] = get_or(settings(), "lambda", 2.0);
    }
    return id;
  }

  Weight weight_setting(const char* key, const json& fallback) const {
    return make_weight(grid_, cfg_.settings.contains(key) ? cfg_.settings.at(key) : fallback);
  }

  BoydOptions boyd_options(BoydOptions base = {}) const {
    base.tolerance = get_or(settings(), "tolerance", base.tolerance);
    base.max_iterations = get_or(settings(), "max_iterations", base.max_iterations);
    return base;
  }

  void artifact(const std::string& name) { artifacts_.push_back(name); }
  fs::path path(const std::string& name) {
    artifact(name);
    return out_ / name;
  }
  const std::vector<std::string>& artifacts() const { return artifacts_; }

  int exit_code = kExitOk;
  std::string message;
  std::string headline;

 private:
  const ExperimentConfig& cfg_;
  fs::path out_;
  Grid grid_;
  std::vector<std::string> artifacts_;
};

GridFunction apply_named(Context& ctx, OperatorName op, const GridFunction& f, json& ids) {
  const double alpha = ctx.alpha();
  switch (op) {
    case OperatorName::kMAlpha: ids["lattices"] = ctx.lattice_id(); return frac_maximal(f, alpha, ctx.lattices());
    case OperatorName::kMAlphaB:
      ids["lattices"] = ctx.lattice_id();
      return frac_maximal_commutator(f, ctx.symbol(), alpha, ctx.lattices());
    case OperatorName::kBracketBMAlpha:
      ids["lattices"] = ctx.lattice_id();
      return maximal_commutator(f, ctx.symbol(), alpha, ctx.lattices());
    case OperatorName::kIAlpha: ids["kernel"] = "riesz"; return riesz_potential(f, alpha);
    case OperatorName::kBracketBIAlpha: ids["kernel"] = "riesz"; return riesz_commutator(f, ctx.symbol(), alpha);
    default: break;
  }
  const SparseFamily s = ctx.family();
  ids["family"] = ctx.family_id(s);
  switch (op) {
    case OperatorName::kTS: return apply_T_S(f, s);
    case OperatorName::kTSAlpha: return apply_T_S_alpha(f, s, alpha);
    case OperatorName::kTSBAlpha: return apply_T_S_b_alpha(f, ctx.symbol(), s, alpha, false);
    default: return apply_T_S_b_alpha(f, ctx.symbol(), s, alpha, true);
  }
}

bool is_sparse_op(OperatorName op) {
  return op == OperatorName::kTS || op == OperatorName::kTSAlpha || op == OperatorName::kTSBAlpha ||
         op == OperatorName::kTSBAlphaStar;
}

json write_output(Context& ctx, const GridFunction& f, const GridFunction& out, json ids) {
  write_grid_binary(ctx.path("output.bin"), out);
  write_grid_csv(ctx.path("output.csv"), out);
  const BloomTriple t = ctx.triple();
  double max_abs = 0.0;
  for (double v : out.values()) max_abs = std::max(max_abs, std::abs(v));
  ids["input_norm"] = weighted_norm(f, t.lambda1(), t.p());
  ids["output_norm"] = weighted_norm(out, t.lambda2(), t.q());
  ids["output_max_abs"] = max_abs;
  ctx.headline = "output_norm = " + headline_number(ids["output_norm"].get<double>());
  return ids;
}

// ---------------------------------------------------------------------------

json run_gen_weight(Context& ctx) {
  const Weight w = ctx.weight_setting("weight", ctx.cfg().triple.at("lambda1"));
  write_grid_binary(ctx.path("weight.bin"), w.function());
  write_grid_csv(ctx.path("weight.csv"), w.function());
  const auto [lo, hi] = std::minmax_element(w.function().values().begin(), w.function().values().end());
  const double integral = w.integral(CellBox{{0, 0}, {ctx.grid().per_axis(), ctx.grid().dim() == 2 ? ctx.grid().per_axis() : 1}});
  ctx.headline = "integral = " + headline_number(integral);
  return {{"min", *lo}, {"max", *hi}, {"integral", integral}};
}

json run_ap_const(Context& ctx) {
  const Weight w = ctx.weight_setting("weight", ctx.cfg().triple.at("lambda1"));
  const double p = get_or(ctx.settings(), "p", ctx.cfg().triple.at("p").get<double>());
  json out = {{"lattices", ctx.lattice_id()}, {"p", p}};
  Characteristic c;
  if (ctx.settings().contains("q")) {
    const double q = ctx.settings().at("q").get<double>();
    c = apq_characteristic(w, p, q, ctx.lattices());
    out["kind"] = "A_pq";
    out["q"] = q;
  } else {
    c = ap_characteristic(w, p, ctx.lattices());
    out["kind"] = "A_p";
  }
  out["value"] = c.value;
  out["argmax_cube"] = cube_json(c.argmax);
  if (get_or(ctx.settings(), "doubling", false)) {
    const DoublingFit d = doubling_exponents(w, p, ctx.lattices());
    out["doubling"] = {{"c1", d.c1}, {"c2", d.c2}, {"sigma", d.sigma}, {"admissible", d.admissible}, {"pairs", d.pairs}};
  }
  ctx.headline = headline_number(c.value);
  return out;
}

json run_bmo(Context& ctx) {
  const BloomTriple t = ctx.triple();
  const OscillationReport r = bmo_norm(ctx.symbol(), t.nu(), ctx.lattices());
  const Characteristic a2 = ap_characteristic(t.nu(), 2.0, ctx.lattices());
  ctx.headline = "bmo_norm = " + headline_number(r.bmo_norm);
  return {{"bmo_norm", r.bmo_norm},
          {"argmax_cube", cube_json(r.argmax)},
          {"lattices", ctx.lattice_id()},
          {"nu_a2", a2.value}};
}

json run_vmo_moduli(Context& ctx) {
  const BloomTriple t = ctx.triple();
  const GridFunction b = ctx.symbol();
  const std::array<double, 2> x0 = point_or(ctx.settings(), "x0", {0.5, 0.5});
  const std::string variant = get_or<std::string>(ctx.settings(), "variant", "l1");
  VmoModuli m;
  if (variant == "l1") {
    m = vmo_moduli(b, t.nu(), ctx.lattices(), x0);
  } else if (variant == "lp" || variant == "lp_dual") {
    const Weight w1 = ctx.weight_setting("w1", ctx.cfg().triple.at("lambda1"));
    const Weight w2 = ctx.weight_setting("w2", ctx.cfg().triple.at("lambda2"));
    const double p = get_or(ctx.settings(), "p", t.p());
    m = vmo_moduli_lp(b, w1, w2, p, variant == "lp" ? LpVariant::kLambda1Lambda2 : LpVariant::kDualLambda1Lambda2,
                      ctx.lattices(), x0);
  } else {
    throw UnknownNameError("unknown moduli variant '" + variant + "'");
  }
  write_curve_csv(ctx.path("small_scale.csv"), m.small_scale);
  write_curve_csv(ctx.path("large_scale.csv"), m.large_scale);
  write_curve_csv(ctx.path("far_away.csv"), m.far_away);
  auto tail = [](const std::vector<ScalePoint>& c) {
    for (auto it = c.rbegin(); it != c.rend(); ++it) {
      if (!it->empty) return it->value;
    }
    return 0.0;
  };
  ctx.headline = "small_scale tail = " + headline_number(tail(m.small_scale));
  return {{"variant", variant},
          {"x0", {x0[0], x0[1]}},
          {"lattices", ctx.lattice_id()},
          {"small_scale", curve_json(m.small_scale)},
          {"large_scale", curve_json(m.large_scale)},
          {"far_away", curve_json(m.far_away)}};
}

json run_sparse_build(Context& ctx) {
  const SparseFamily s = ctx.family();
  const SparseCertificate cert = verify_sparse(s);
  write_json(ctx.path("family.json"), sparse_to_json(s));
  ctx.headline = "cubes = " + std::to_string(s.size());
  return {{"family", ctx.family_id(s)}, {"verified", cert.ok}, {"min_ratio", cert.min_ratio}};
}

json run_sparse_verify(Context& ctx) {
  if (!ctx.settings().contains("family")) throw PreconditionError("sparse-verify needs a family file (settings.family)");
  const SparseFamily s = ctx.family();
  const SparseCertificate cert = verify_sparse(s);
  json out = {{"family", ctx.family_id(s)}, {"ok", cert.ok}, {"min_ratio", cert.min_ratio}};
  if (!cert.ok) {
    out["message"] = cert.message;
    out["cube"] = cube_json(cert.cube);
    ctx.exit_code = kExitInvariant;
    ctx.message = cert.message;
    ctx.headline = "INVALID " + cert.message;
  } else {
    ctx.headline = "ok";
  }
  return out;
}

json run_sparse_apply(Context& ctx) {
  const OperatorName op = parse_operator(ctx.cfg().op);
  if (!is_sparse_op(op)) throw PreconditionError("sparse-apply needs a sparse operator (T_S, T_S_alpha, T_S_b_alpha, T_S_b_alpha_star)");
  const GridFunction f = ctx.input();
  json ids = {{"operator", ctx.cfg().op}};
  const GridFunction out = apply_named(ctx, op, f, ids);
  return write_output(ctx, f, out, ids);
}

json run_op_apply(Context& ctx) {
  const OperatorName op = parse_operator(ctx.cfg().op);
  const GridFunction f = ctx.input();
  json ids = {{"operator", ctx.cfg().op}};
  const GridFunction out = apply_named(ctx, op, f, ids);
  return write_output(ctx, f, out, ids);
}

json run_norm(Context& ctx) {
  const OperatorName op = parse_operator(ctx.cfg().op);
  const BloomTriple t = ctx.triple();
  const NormSpaces spaces = NormSpaces::from_triple(t);
  const BoydOptions opts = ctx.boyd_options();
  json ids = {{"operator", ctx.cfg().op}};
  NormBracket nb;
  switch (op) {
    case OperatorName::kMAlpha: {
      FracMaximalOperator m(ctx.lattices(), t.alpha());
      nb = boyd_norm(m, spaces, opts);
      ids["lattices"] = ctx.lattice_id();
      break;
    }
    case OperatorName::kMAlphaB: {
      const MaximalCommutator mc(ctx.symbol(), t.alpha(), ctx.lattices());
      MaximalCommutatorOperator m(mc);
      nb = boyd_norm(m, spaces, opts);
      ids["lattices"] = ctx.lattice_id();
      break;
    }
    case OperatorName::kBracketBMAlpha:
      throw PreconditionError("bracket_b_M_alpha is neither sign-preserving nor linear; no norm bracket is available");
    case OperatorName::kIAlpha:
      nb = boyd_norm(riesz_kernel(ctx.grid(), t.alpha()).m, spaces, opts);
      ids["kernel"] = "riesz";
      break;
    case OperatorName::kBracketBIAlpha: {
      SignedOptions so;
      so.boyd = ctx.boyd_options(so.boyd);
      so.starts = get_or(ctx.settings(), "starts", so.starts);
      so.seed = ctx.cfg().seed;
      nb = signed_norm(commutator_kernel(riesz_kernel(ctx.grid(), t.alpha()), ctx.symbol()).m, spaces, so);
      ids["kernel"] = "riesz";
      break;
    }
    default: {
      const SparseFamily s = ctx.family();
      ids["family"] = ctx.family_id(s);
      const GridFunction b = ctx.symbol();
      const SparseKind kind = op == OperatorName::kTSBAlpha       ? SparseKind::kBracket
                              : op == OperatorName::kTSBAlphaStar ? SparseKind::kBracketAdjoint
                                                                  : SparseKind::kPlain;
      const double a = op == OperatorName::kTS ? 0.0 : t.alpha();
      nb = boyd_norm(sparse_operator_matrix(s, a, kind, &b), spaces, opts);
    }
  }
  json out = ids;
  out["bracket"] = to_json(nb, get_or(ctx.settings(), "witness", false));
  out["q"] = t.q();
  if (op == OperatorName::kMAlphaB || op == OperatorName::kBracketBIAlpha) {
    const OscillationReport r = bmo_norm(ctx.symbol(), t.nu(), ctx.lattices());
    out["bmo_norm"] = r.bmo_norm;
    out["lower_over_bmo"] = r.bmo_norm > 0.0 ? json(nb.lower / r.bmo_norm) : json(nullptr);
  }
  ctx.headline = "[" + headline_number(nb.lower) + ", " + headline_number(nb.upper) + "]";
  return out;
}

json run_dominate(Context& ctx) {
  const GridFunction f = ctx.input();
  const DominationReport r =
      check_sparse_domination(f, ctx.symbol(), ctx.alpha(), ctx.lattices(), get_or(ctx.settings(), "lambda", 8.0));
  {
    std::ofstream os;
    const fs::path p = ctx.path("domination.csv");
    os.open(p);
    os << "cell,lhs,rhs\n";
    for (std::size_t i = 0; i < r.lhs.size(); ++i)
      os << i << ',' << format_double(r.lhs[i]) << ',' << format_double(r.rhs[i]) << '\n';
  }
  json fams = json::array();
  for (const SparseFamily& s : r.families) fams.push_back({{"shift", s.shift_id}, {"size", s.size()}, {"eta", s.eta}});
  const bool dominated = r.violations == 0;
  if (!dominated) {
    ctx.exit_code = kExitInvariant;
    ctx.message = std::to_string(r.violations) + " cells have LHS > 0 where the sparse sum vanishes";
  }
  ctx.headline = "constant = " + headline_number(r.constant);
  return {{"constant", r.constant},
          {"worst_cell", r.worst_cell},
          {"violations", r.violations},
          {"dominated", dominated},
          {"lambda", get_or(ctx.settings(), "lambda", 8.0)},
          {"lattices", ctx.lattice_id()},
          {"families", fams}};
}

json run_profile(Context& ctx) {
  const OperatorName op = parse_operator(ctx.cfg().op);
  std::vector<ProfileSetting> ladder;
  if (ctx.settings().contains("ladder")) {
    for (const json& s : ctx.settings().at("ladder")) {
      ladder.push_back({s.value("epsilon", 0.0), s.at("qn_level").get<int>(), s.at("delta").get<double>()});
    }
  } else {
    ladder = default_ladder();
  }
  ProfileOptions opts;
  opts.x0 = point_or(ctx.settings(), "x0", opts.x0);
  opts.boyd = ctx.boyd_options(opts.boyd);
  const CompactnessProfile prof = compactness_profile(op, ctx.symbol(), ctx.triple(), ladder, opts);
  {
    std::ofstream os(ctx.path("profile.csv"));
    os << "epsilon,n_side,delta,lower,upper,count_i,count_ii,count_iii,finite_count,finite_rank,operator_rank\n";
    for (const ProfileEntry& e : prof.entries) {
      os << format_double(e.setting.epsilon) << ',' << format_double(e.n_side) << ',' << format_double(e.setting.delta)
         << ',' << format_double(e.tail.lower) << ',' << format_double(e.tail.upper) << ',' << e.count_i << ','
         << e.count_ii << ',' << e.count_iii << ',' << e.finite_count << ',' << e.finite_rank << ','
         << e.operator_rank << '\n';
    }
  }
  json out = to_json(prof);
  out["family"] = {{"shift", prof.family.shift_id}, {"size", prof.family.size()}, {"eta", prof.family.eta},
                   {"source", "reference"}};
  ctx.headline = "decay_factor = " + headline_number(prof.decay_factor);
  return out;
}

json run_falsify(Context& ctx) {
  const OperatorName op = parse_operator(ctx.cfg().op);
  const FailingCondition cond = parse_condition(get_or<std::string>(ctx.settings(), "condition", "small_scale"));
  FalsifierOptions opts;
  opts.max_scales = get_or(ctx.settings(), "max_scales", opts.max_scales);
  opts.partner_factor = get_or(ctx.settings(), "partner_factor", opts.partner_factor);
  opts.x0 = point_or(ctx.settings(), "x0", opts.x0);
  const FalsifierReport r = falsify(ctx.symbol(), ctx.triple(), op, cond, ctx.lattices(), opts);
  write_curve_csv(ctx.path("curve.csv"), r.curve);
  {
    std::ofstream os(ctx.path("separation.csv"));
    os << "j,k,separation\n";
    for (std::size_t j = 0; j < r.separation.size(); ++j) {
      for (std::size_t k = 0; k < r.separation[j].size(); ++k)
        os << j << ',' << k << ',' << format_double(r.separation[j][k]) << '\n';
    }
  }
  json out = to_json(r);
  out["lattices"] = ctx.lattice_id();
  ctx.headline = "min_image_norm = " + headline_number(r.min_image_norm) +
                 ", min_separation = " + headline_number(r.min_separation);
  return out;
}

using Runner = std::function<json(Context&)>;

const std::map<std::string, Runner>& runners() {
  static const std::map<std::string, Runner> r = {
      {"gen-weight", run_gen_weight}, {"ap-const", run_ap_const},       {"bmo", run_bmo},
      {"vmo-moduli", run_vmo_moduli}, {"sparse-build", run_sparse_build}, {"sparse-verify", run_sparse_verify},
      {"sparse-apply", run_sparse_apply}, {"op-apply", run_op_apply},   {"norm", run_norm},
      {"dominate", run_dominate},     {"profile", run_profile},         {"falsify", run_falsify},
  };
  return r;
}

}  // namespace

// ---------------------------------------------------------------------------

ExperimentConfig ExperimentConfig::parse(const json& j) {
  require_object(j, "config");
  static const std::set<std::string> known = {"schema", "grid",     "triple",   "symbol", "input",      "operator",
                                              "diagnostic", "settings", "seed", "output_dir", "threads"};
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) throw PreconditionError("unknown config field '" + k + "'");
  }
  if (j.contains("schema") && j.at("schema") != kConfigSchema)
    throw PreconditionError("unsupported config schema " + j.at("schema").dump());

  ExperimentConfig c;
  const json grid = j.value("grid", json::object());
  require_object(grid, "grid");
  c.n = get_or(grid, "n", 1);
  c.depth = get_or(grid, "L", 8);
  if (c.n != 1 && c.n != 2) throw PreconditionError("grid.n must be 1 or 2");
  if (c.depth < 1 || c.depth > (c.n == 1 ? 24 : 12)) throw PreconditionError("grid.L out of range");

  const json t = j.value("triple", json::object());
  require_object(t, "triple");
  if (t.contains("q")) throw PreconditionError("q is derived from 1/q = 1/p - alpha/n and must not be supplied");
  for (const auto& [k, v] : t.items()) {
    if (k != "alpha" && k != "p" && k != "lambda1" && k != "lambda2")
      throw PreconditionError("unknown triple field '" + k + "'");
  }
  c.triple = {{"alpha", get_or(t, "alpha", 0.5)},
              {"p", get_or(t, "p", 4.0 / 3.0)},
              {"lambda1", t.value("lambda1", kUnitWeight)},
              {"lambda2", t.value("lambda2", kUnitWeight)}};

  c.seed = get_or(j, "seed", std::uint64_t{1});
  c.symbol = with_seed(j.value("symbol", json{{"kind", "constant"}, {"c", 0.0}}), c.seed);
  c.input = with_seed(j.value("input", json{{"kind", "constant"}, {"c", 1.0}}), c.seed);
  require_object(c.symbol, "symbol");
  require_object(c.input, "input");
  c.op = get_or<std::string>(j, "operator", "M_alpha_b");
  c.diagnostic = get_or<std::string>(j, "diagnostic", "");
  c.settings = j.value("settings", json::object());
  require_object(c.settings, "settings");
  c.output_dir = get_or<std::string>(j, "output_dir", "");
  c.threads = get_or(j, "threads", 1);

  if (!runners().count(c.diagnostic)) throw UnknownNameError("unknown diagnostic '" + c.diagnostic + "'");
  parse_operator(c.op);

  // Every referenced generator must exist; a tiny grid suffices to check.
  const Grid probe(c.n, 2);
  make_weight(probe, c.triple["lambda1"]);
  make_weight(probe, c.triple["lambda2"]);
  make_symbol(probe, c.symbol);
  if (!c.input.contains("path")) make_symbol(probe, c.input);
  BloomTriple::make(c.triple["alpha"].get<double>(), c.triple["p"].get<double>(), constant_weight(probe, 1.0),
                    constant_weight(probe, 1.0));
  return c;
}

json ExperimentConfig::to_json() const {
  return {{"schema", kConfigSchema}, {"grid", {{"n", n}, {"L", depth}}},
          {"triple", triple},        {"symbol", symbol},
          {"input", input},          {"operator", op},
          {"diagnostic", diagnostic}, {"settings", settings},
          {"seed", seed}};
}

fs::path resolve_output_dir(const std::string& explicit_dir, const std::string& config_dir) {
  if (!explicit_dir.empty()) return explicit_dir;
  if (!config_dir.empty()) return config_dir;
  if (const char* env = std::getenv("BLOOMVMO_OUT"); env != nullptr && *env != '\0') return env;
  return "bloomvmo-out";
}

RunOutcome run_experiment(const ExperimentConfig& cfg, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  Context ctx(cfg, out_dir);
  json result = runners().at(cfg.diagnostic)(ctx);

  const BloomTriple t = ctx.triple();
  json summary = {{"schema", kSummarySchema},
                  {"diagnostic", cfg.diagnostic},
                  {"grid", {{"n", cfg.n}, {"L", cfg.depth}}},
                  {"triple", {{"alpha", t.alpha()}, {"p", t.p()}, {"q", t.q()}}},
                  {"seed", cfg.seed},
                  {"exit_code", ctx.exit_code}};
  for (auto& [k, v] : result.items()) summary[k] = v;
  std::vector<std::string> artifacts = ctx.artifacts();
  artifacts.push_back("config.replay.json");
  artifacts.push_back("summary.json");
  std::sort(artifacts.begin(), artifacts.end());
  summary["artifacts"] = artifacts;

  write_json(out_dir / "config.replay.json", cfg.to_json());
  write_json(out_dir / "summary.json", summary);

  RunOutcome o;
  o.exit_code = ctx.exit_code;
  o.summary = std::move(summary);
  o.output_dir = out_dir;
  o.headline = ctx.headline;
  o.message = ctx.message;
  return o;
}

int exit_code_for(const std::exception& e, std::ostream& err) {
  if (dynamic_cast<const UnknownNameError*>(&e) != nullptr) {
    err << "error: " << e.what() << '\n';
    return kExitUnknownName;
  }
  if (dynamic_cast<const InvariantViolation*>(&e) != nullptr) {
    err << "invariant violation: " << e.what() << '\n';
    return kExitInvariant;
  }
  if (dynamic_cast<const PreconditionError*>(&e) != nullptr || dynamic_cast<const DomainError*>(&e) != nullptr) {
    err << "precondition failed: " << e.what() << '\n';
    return kExitPrecondition;
  }
  if (dynamic_cast<const nlohmann::json::exception*>(&e) != nullptr) {
    err << "precondition failed: malformed JSON: " << e.what() << '\n';
    return kExitPrecondition;
  }
  err << "error: " << e.what() << '\n';
  return 1;
}

}  // namespace bloomvmo
