#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "bloomvmo/grid.hpp"

namespace bloomvmo {

/// Cubes of one lattice, each with an explicit witness cell set E_Q.
struct SparseFamily {
  Grid grid{1, 0};
  int shift_id = 0;
  double eta = 0.0;
  std::vector<DyadicCube> cubes;
  std::vector<std::vector<std::size_t>> witnesses;  // sorted linear cell indices

  std::size_t size() const { return cubes.size(); }
  Lattice lattice() const { return Lattice(grid, shift_id); }
};

struct SparseCertificate {
  bool ok = true;
  std::string message;
  DyadicCube cube;         // first offending cube
  DyadicCube other;        // second cube of an overlapping pair
  double min_ratio = 1.0;  // min |E_Q|/|Q|
};

/// Exact check of E_Q subset Q, |E_Q| >= eta |Q|, pairwise disjointness and
/// lattice membership.
SparseCertificate verify_sparse(const SparseFamily& s);

/// Calderon-Zygmund stopping family for |f| with threshold ratio lambda > 1;
/// eta = 1 - 1/lambda.
SparseFamily build_sparse_cz(const GridFunction& f, const Lattice& lat, double lambda = 2.0);

/// Density for a stopping criterion. It may depend on the current stopping
/// cube (e.g. |b - <b>_Q| |f|); values must be nonnegative.
struct StoppingRule {
  std::function<GridFunction(const CellBox& q)> density;
  bool depends_on_cube = false;
};

/// Stopping family selecting maximal R with <d_i>_R > lambda <d_i>_Q for some
/// rule i. With K rules the family is (1 - K/lambda)-sparse; needs lambda > K.
SparseFamily build_sparse_stopping(const Lattice& lat, const std::vector<StoppingRule>& rules, double lambda);

struct AugmentResult {
  SparseFamily family;
  double max_ratio = 0.0;  // max over Q in family, x in Q of LHS/RHS
  DyadicCube worst_cube;
  std::size_t worst_cell = 0;
};

/// Enlarges an eta-sparse family S by oscillation stopping cubes so that
///   |b(x) - <b>_Q| <= 2^(n+2) sum_{R in S~, R subset Q} Osc(b,R) chi_R(x)
/// for every Q in S~ and x in Q, and rebuilds witnesses at eta/(2(1+eta)).
/// Throws InvariantViolation if the bound or the witness rebuild fails.
AugmentResult augment_sparse(const SparseFamily& s, const GridFunction& b);

/// Max over Q in s and x in Q of |b(x)-<b>_Q| / (c sum_{R subset Q, x in R} Osc(b,R)).
double pointwise_oscillation_ratio(const SparseFamily& s, const GridFunction& b, double c, DyadicCube* worst = nullptr,
                                   std::size_t* worst_cell = nullptr);

/// sum_Q <|f|>_Q chi_Q.
GridFunction apply_T_S(const GridFunction& f, const SparseFamily& s);
/// sum_Q |Q|^(alpha/n) <|f|>_Q chi_Q.
GridFunction apply_T_S_alpha(const GridFunction& f, const SparseFamily& s, double alpha);
/// adjoint = false: sum_Q |Q|^(alpha/n) |b(x) - <b>_Q| <f>_Q chi_Q(x)
/// adjoint = true:  sum_Q |Q|^(alpha/n) <|b - <b>_Q| f>_Q chi_Q(x)
GridFunction apply_T_S_b_alpha(const GridFunction& f, const GridFunction& b, const SparseFamily& s, double alpha,
                               bool adjoint);

enum class SparseKind { kPlain, kBracket, kBracketAdjoint };

/// Dense matrix M with (T f)(x_i) = sum_j M(i,j) f(x_j); cell volume included.
/// Only the listed cubes (all if `subset` is empty) contribute.
Eigen::MatrixXd sparse_operator_matrix(const SparseFamily& s, double alpha, SparseKind kind,
                                       const GridFunction* b = nullptr, const std::vector<std::size_t>& subset = {});

enum class TruncationClass { kFinite, kTailI, kTailII, kTailIII };

struct TruncationSplit {
  std::vector<std::size_t> finite;  // IV: Q subset Q_N, side >= delta
  std::vector<std::size_t> tail_i;  // Q strictly contains Q_N
  std::vector<std::size_t> tail_ii;   // Q disjoint from Q_N
  std::vector<std::size_t> tail_iii;  // Q subset Q_N, side < delta
  std::vector<TruncationClass> label;  // per cube of the family

  std::vector<std::size_t> tails() const;
};

/// Assigns each cube of s to one truncation class. q_n must be a cube of the
/// family's lattice and delta < side(q_n).
TruncationSplit split_truncation(const SparseFamily& s, const DyadicCube& q_n, double delta);

nlohmann::json sparse_to_json(const SparseFamily& s);
SparseFamily sparse_from_json(const nlohmann::json& j);

const char* to_string(TruncationClass c);

}  // namespace bloomvmo
