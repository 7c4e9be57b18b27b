#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "json.hpp"

#include "bloomvmo/diagnostics.hpp"
#include "bloomvmo/errors.hpp"
#include "bloomvmo/experiment.hpp"
#include "bloomvmo/norms.hpp"
#include "bloomvmo/operators.hpp"
#include "bloomvmo/oscillation.hpp"
#include "bloomvmo/sparse.hpp"
#include "bloomvmo/symbols.hpp"
#include "bloomvmo/weights.hpp"

namespace py = pybind11;
using namespace bloomvmo;
using nlohmann::json;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// Flat arrays of length 2^(nL), first axis fastest.
Grid grid_for(std::size_t size, int n) {
  int depth = 0;
  while ((std::size_t{1} << (n * depth)) < size) ++depth;
  if ((std::size_t{1} << (n * depth)) != size) throw PreconditionError("array length is not 2^(nL)");
  return Grid(n, depth);
}

GridFunction to_grid(const Array& a, int n) {
  const Grid g = grid_for(static_cast<std::size_t>(a.size()), n);
  return GridFunction(g, std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const std::vector<double>& v) { return Array(static_cast<py::ssize_t>(v.size()), v.data()); }

LatticeSet lattice_set(const Grid& g, const std::string& which) {
  if (which == "all") return LatticeSet::all_shifts(g);
  if (which == "standard") return LatticeSet::standard(g);
  throw UnknownNameError("unknown lattice set '" + which + "'");
}

BloomTriple triple_of(double alpha, double p, const Array& l1, const Array& l2, int n) {
  return BloomTriple::make(alpha, p, Weight(to_grid(l1, n)), Weight(to_grid(l2, n)));
}

py::dict curves(const VmoModuli& m) {
  auto one = [](const std::vector<ScalePoint>& c) {
    py::list out;
    for (const ScalePoint& pt : c) out.append(py::make_tuple(pt.level, pt.scale, pt.value, pt.empty));
    return out;
  };
  py::dict d;
  d["small_scale"] = one(m.small_scale);
  d["large_scale"] = one(m.large_scale);
  d["far_away"] = one(m.far_away);
  return d;
}

py::tuple bracket(const NormBracket& b) { return py::make_tuple(b.lower, b.upper); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Dyadic-grid diagnostics for Bloom-weighted fractional commutators";

  py::register_exception<UnknownNameError>(m, "UnknownNameError", PyExc_KeyError);
  py::register_exception<PreconditionError>(m, "PreconditionError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<InvariantViolation>(m, "InvariantViolation", PyExc_RuntimeError);

  m.def("make_symbol", [](int n, int depth, const std::string& spec) {
    return to_array(make_symbol(Grid(n, depth), json::parse(spec)).values());
  }, py::arg("n"), py::arg("depth"), py::arg("spec"));

  m.def("make_weight", [](int n, int depth, const std::string& spec) {
    return to_array(make_weight(Grid(n, depth), json::parse(spec)).function().values());
  }, py::arg("n"), py::arg("depth"), py::arg("spec"));

  m.def("ap_characteristic", [](const Array& w, double p, int n, const std::string& lattices) {
    const Weight wt(to_grid(w, n));
    return ap_characteristic(wt, p, lattice_set(wt.grid(), lattices)).value;
  }, py::arg("w"), py::arg("p"), py::arg("n") = 1, py::arg("lattices") = "all");

  m.def("bmo_norm", [](const Array& b, const Array& nu, int n, const std::string& lattices) {
    const GridFunction bf = to_grid(b, n);
    return bmo_norm(bf, Weight(to_grid(nu, n)), lattice_set(bf.grid(), lattices)).bmo_norm;
  }, py::arg("b"), py::arg("nu"), py::arg("n") = 1, py::arg("lattices") = "all");

  m.def("vmo_moduli", [](const Array& b, const Array& nu, int n, std::array<double, 2> x0) {
    const GridFunction bf = to_grid(b, n);
    return curves(vmo_moduli(bf, Weight(to_grid(nu, n)), LatticeSet::all_shifts(bf.grid()), x0));
  }, py::arg("b"), py::arg("nu"), py::arg("n") = 1, py::arg("x0") = std::array<double, 2>{0.5, 0.5});

  m.def("weighted_norm", [](const Array& f, const Array& lambda, double p, int n) {
    return weighted_norm(to_grid(f, n), Weight(to_grid(lambda, n)), p);
  }, py::arg("f"), py::arg("lam"), py::arg("p"), py::arg("n") = 1);

  m.def("build_sparse_cz", [](const Array& f, int n, int shift, double lambda) {
    const GridFunction ff = to_grid(f, n);
    return sparse_to_json(build_sparse_cz(ff, Lattice(ff.grid(), shift), lambda)).dump();
  }, py::arg("f"), py::arg("n") = 1, py::arg("shift") = 0, py::arg("lam") = 2.0);

  m.def("verify_sparse", [](const std::string& family) {
    const SparseCertificate c = verify_sparse(sparse_from_json(json::parse(family)));
    return py::make_tuple(c.ok, c.message, c.min_ratio);
  }, py::arg("family"));

  m.def("apply_sparse", [](const std::string& op, const Array& f, const std::string& family, double alpha,
                           std::optional<Array> b, int n) {
    const SparseFamily s = sparse_from_json(json::parse(family));
    const GridFunction ff = to_grid(f, n);
    const OperatorName name = parse_operator(op);
    switch (name) {
      case OperatorName::kTS: return to_array(apply_T_S(ff, s).values());
      case OperatorName::kTSAlpha: return to_array(apply_T_S_alpha(ff, s, alpha).values());
      case OperatorName::kTSBAlpha:
      case OperatorName::kTSBAlphaStar:
        if (!b) throw PreconditionError("the bracket sparse operators need b");
        return to_array(apply_T_S_b_alpha(ff, to_grid(*b, n), s, alpha, name == OperatorName::kTSBAlphaStar).values());
      default: throw PreconditionError("not a sparse operator: " + op);
    }
  }, py::arg("op"), py::arg("f"), py::arg("family"), py::arg("alpha") = 0.0, py::arg("b") = py::none(),
     py::arg("n") = 1);

  m.def("frac_maximal", [](const Array& f, double alpha, int n) {
    const GridFunction ff = to_grid(f, n);
    return to_array(frac_maximal(ff, alpha, LatticeSet::all_shifts(ff.grid())).values());
  }, py::arg("f"), py::arg("alpha"), py::arg("n") = 1);

  m.def("frac_maximal_commutator", [](const Array& f, const Array& b, double alpha, int n) {
    const GridFunction ff = to_grid(f, n);
    return to_array(frac_maximal_commutator(ff, to_grid(b, n), alpha, LatticeSet::all_shifts(ff.grid())).values());
  }, py::arg("f"), py::arg("b"), py::arg("alpha"), py::arg("n") = 1);

  m.def("riesz_potential", [](const Array& f, double alpha, int n) {
    return to_array(riesz_potential(to_grid(f, n), alpha).values());
  }, py::arg("f"), py::arg("alpha"), py::arg("n") = 1);

  m.def("riesz_commutator", [](const Array& f, const Array& b, double alpha, int n) {
    return to_array(riesz_commutator(to_grid(f, n), to_grid(b, n), alpha).values());
  }, py::arg("f"), py::arg("b"), py::arg("alpha"), py::arg("n") = 1);

  m.def("boyd_matrix", [](const Eigen::MatrixXd& a, double p, double q) { return bracket(boyd_matrix(a, p, q)); },
        py::arg("a"), py::arg("p"), py::arg("q"));

  m.def("signed_norm", [](const Eigen::MatrixXd& a, double p, double q) {
    const Grid g = grid_for(static_cast<std::size_t>(a.cols()), 1);
    return bracket(signed_norm(a, NormSpaces::unweighted(g, p, q)));
  }, py::arg("a"), py::arg("p"), py::arg("q"));

  m.def("maximal_commutator_norm", [](const Array& b, double alpha, double p, const Array& l1, const Array& l2,
                                      int n) {
    const BloomTriple t = triple_of(alpha, p, l1, l2, n);
    const MaximalCommutator mc(to_grid(b, n), alpha, LatticeSet::all_shifts(t.lambda1().grid()));
    MaximalCommutatorOperator op(mc);
    return bracket(boyd_norm(op, NormSpaces::from_triple(t)));
  }, py::arg("b"), py::arg("alpha"), py::arg("p"), py::arg("lambda1"), py::arg("lambda2"), py::arg("n") = 1);

  m.def("run_experiment", [](const std::string& config, const std::string& out_dir) {
    const ExperimentConfig cfg = ExperimentConfig::parse(json::parse(config));
    const RunOutcome r = run_experiment(cfg, resolve_output_dir(out_dir, cfg.output_dir));
    return py::make_tuple(r.exit_code, r.summary.dump());
  }, py::arg("config"), py::arg("out_dir") = "");
}
