#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bloomvmo/grid.hpp"
#include "bloomvmo/sparse.hpp"
#include "bloomvmo/weights.hpp"

namespace bloomvmo {

/// M_alpha f(x): sup over lattice cubes Q containing x of |Q|^(alpha/n) <|f|>_Q.
GridFunction frac_maximal(const GridFunction& f, double alpha, const LatticeSet& lattices);

/// The sublinear operator M_alpha^b with a cached evaluation plan.
///
/// For each cube the cells are kept sorted by b, so the whole column
/// x -> int_Q |b(x)-b(y)| |f(y)| dy costs O(|Q|) per cube. evaluate() records
/// the maximizing cube of every cell; apply_selection()/adjoint_selection()
/// are the linear operator obtained by freezing those cubes.
class MaximalCommutator {
 public:
  MaximalCommutator(GridFunction b, double alpha, const LatticeSet& lattices);

  const Grid& grid() const { return b_.grid(); }
  double alpha() const { return alpha_; }
  std::size_t cube_count() const { return cubes_.size(); }

  /// Values of M_alpha^b |f|; `selection` (optional) receives the argmax cube id per cell.
  std::vector<double> evaluate(std::span<const double> f, std::vector<std::uint32_t>* selection = nullptr) const;
  GridFunction apply(const GridFunction& f) const;

  /// Linear operator frozen at a selection, and its transpose (cell volume included).
  std::vector<double> apply_selection(std::span<const std::uint32_t> selection, std::span<const double> f) const;
  std::vector<double> adjoint_selection(std::span<const std::uint32_t> selection, std::span<const double> g) const;

  /// Dense majorant: sum over every cube of |Q|^(alpha/n-1) |b(x)-b(y)| chi_Q(x) chi_Q(y) h^n.
  Eigen::MatrixXd all_cubes_majorant() const;

  CellBox cube_box(std::uint32_t id) const { return cubes_[id].box; }

 private:
  struct Plan {
    CellBox box;
    double scale;             // |Q|^(alpha/n) / (#cells of Q)
    std::size_t begin, end;   // range in order_
  };
  GridFunction b_;
  double alpha_;
  std::vector<Plan> cubes_;
  std::vector<std::size_t> order_;  // cells of each cube sorted by b
};

GridFunction frac_maximal_commutator(const GridFunction& f, const GridFunction& b, double alpha,
                                     const LatticeSet& lattices);

/// [b, M_alpha] f = b M_alpha f - M_alpha(b f).
GridFunction maximal_commutator(const GridFunction& f, const GridFunction& b, double alpha,
                                const LatticeSet& lattices);

/// Dense discretized kernel, stored as the matrix M with (K f)(x_i) = sum_j M(i,j) f_j.
/// Off-diagonal entries use the cell midpoints, M(i,j) = h^n |x_i - x_j|^(alpha-n);
/// diagonal entries are the exact integral of |x_i - y|^(alpha-n) over cell i.
struct KernelMatrix {
  Grid grid{1, 0};
  double alpha = 0.0;
  Eigen::MatrixXd m;
  bool is_signed = false;
  std::string diagonal = "cell-exact";
};

constexpr std::size_t kMaxKernelCells = 4096;

/// Integral of |y|^(alpha-n) over a cell of side h centred at the origin.
double riesz_cell_self_integral(int dim, double h, double alpha);

KernelMatrix riesz_kernel(const Grid& g, double alpha);
/// (b(x) - b(y)) K(x,y).
KernelMatrix commutator_kernel(const KernelMatrix& k, const GridFunction& b);
/// |b(x) - b(y)| K(x,y).
KernelMatrix majorant_kernel(const KernelMatrix& k, const GridFunction& b);

GridFunction apply_kernel(const KernelMatrix& k, const GridFunction& f);
GridFunction riesz_potential(const GridFunction& f, double alpha);
GridFunction riesz_commutator(const GridFunction& f, const GridFunction& b, double alpha);

struct PartnerCube {
  CellBox box;
  CellBox partner;
  double radius = 0.0;            // circumradius side*sqrt(n)/2
  Index shift_cells = 0;          // signed translation along the first axis
  double gap = 0.0;               // dist(B, partner)
  double min_ratio = 0.0;         // min over B x partner of K(x,y) r^(n-alpha)
  double bound = 0.0;             // (A+2)^(alpha-n)
  double grid_min_ratio = 0.0;    // same over cell midpoints
  double grid_distance_error = 0.0;  // |max midpoint distance - max distance|
  bool ok = false;                // min_ratio >= bound
};

/// Partner of B translated by floor(A r / h) cells along the first axis
/// (towards +x when possible). Throws DomainError when neither direction fits.
PartnerCube partner_ball(const Grid& g, const CellBox& b, double a, double alpha);

struct GapValue {
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
};

/// lhs = 1/nu(Q), rhs = |Q|^(alpha/n) / (l1^p(Q)^(1/p) l2^(-q')(Q)^(1/q')).
GapValue lemma41_gap(const CellBox& q, const BloomTriple& t);

struct GapSweep {
  double max_ratio = 0.0;
  double min_ratio = 0.0;
  DyadicCube argmax;
  std::size_t cubes = 0;
};
GapSweep lemma41_sweep(const BloomTriple& t, const LatticeSet& lattices);

struct DominationReport {
  double constant = 0.0;     // max LHS/RHS over cells with RHS > 0
  std::size_t worst_cell = 0;
  std::size_t violations = 0;  // cells with LHS > 0 and RHS = 0
  std::vector<double> lhs;
  std::vector<double> rhs;
  std::vector<SparseFamily> families;
};

/// LHS(x) = int |b(x)-b(y)| K_alpha(x,y) |f(y)| dy against
/// RHS(x) = sum_j T^alpha_{S_j,b}|f|(x) + (T^alpha_{S_j,b})^*|f|(x), with one
/// stopping family per lattice built from <|f|>, <|b-<b>_Q| |f|> and <|b-<b>_Q|>.
DominationReport check_sparse_domination(const GridFunction& f, const GridFunction& b, double alpha,
                                         const LatticeSet& lattices, double lambda = 8.0);

}  // namespace bloomvmo
