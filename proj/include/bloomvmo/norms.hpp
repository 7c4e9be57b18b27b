#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bloomvmo/operators.hpp"
#include "bloomvmo/weights.hpp"

namespace bloomvmo {

/// (int |f|^p lambda^p)^(1/p), exact on the grid.
double weighted_norm(std::span<const double> f, const Weight& lambda, double p);
double weighted_norm(const GridFunction& f, const Weight& lambda, double p);

/// Source L^p(l1^p) and target L^q(l2^q).
struct NormSpaces {
  double p = 2.0;
  double q = 2.0;
  Weight lambda1;
  Weight lambda2;

  static NormSpaces from_triple(const BloomTriple& t);
  static NormSpaces unweighted(const Grid& g, double p, double q);
};

struct NormBracket {
  double lower = 0.0;
  double upper = 0.0;
  std::vector<double> witness;  // f attaining `lower`
  double witness_ratio = 0.0;   // ||T witness|| / ||witness||, recomputed
  std::vector<double> log;      // lower estimate after each iteration
  int iterations = 0;
  std::string upper_kind;
};

struct BoydOptions {
  double tolerance = 1e-8;  // stop when the relative gain falls below this
  int max_iterations = 500;
  int random_starts = 4;    // extra positive starts for sublinear operators
  std::uint64_t seed = 1;
};

/// Operator for the power method. apply() must map nonnegative vectors to
/// nonnegative vectors; adjoint() is the transpose of the linear operator
/// realized by the most recent apply() (for sublinear operators, the
/// linearization at that input).
class PowerOperator {
 public:
  virtual ~PowerOperator() = default;
  virtual std::size_t size() const = 0;
  virtual Eigen::VectorXd apply(const Eigen::VectorXd& x) = 0;
  virtual Eigen::VectorXd adjoint(const Eigen::VectorXd& g) = 0;
  /// Nonnegative matrix dominating the operator entrywise on nonnegative inputs.
  virtual const Eigen::MatrixXd& majorant() = 0;
  /// Linear operators need a single start; sublinear ones get several.
  virtual bool linear() const { return false; }
};

class DenseOperator final : public PowerOperator {
 public:
  explicit DenseOperator(Eigen::MatrixXd m) : m_(std::move(m)) {}
  std::size_t size() const override { return static_cast<std::size_t>(m_.cols()); }
  Eigen::VectorXd apply(const Eigen::VectorXd& x) override { return m_ * x; }
  Eigen::VectorXd adjoint(const Eigen::VectorXd& g) override { return m_.transpose() * g; }
  const Eigen::MatrixXd& majorant() override { return m_; }
  bool linear() const override { return true; }

 private:
  Eigen::MatrixXd m_;
};

/// M_alpha^b, linearized at the maximizing cubes of the latest input.
class MaximalCommutatorOperator final : public PowerOperator {
 public:
  explicit MaximalCommutatorOperator(const MaximalCommutator& m) : m_(m) {}
  std::size_t size() const override { return m_.grid().cell_count(); }
  Eigen::VectorXd apply(const Eigen::VectorXd& x) override;
  Eigen::VectorXd adjoint(const Eigen::VectorXd& g) override;
  const Eigen::MatrixXd& majorant() override;

 private:
  const MaximalCommutator& m_;
  std::vector<std::uint32_t> selection_;
  Eigen::MatrixXd majorant_;
  bool have_majorant_ = false;
};

/// M_alpha, linearized at the maximizing cubes of the latest input.
class FracMaximalOperator final : public PowerOperator {
 public:
  FracMaximalOperator(const LatticeSet& lattices, double alpha);
  std::size_t size() const override { return grid_.cell_count(); }
  Eigen::VectorXd apply(const Eigen::VectorXd& x) override;
  Eigen::VectorXd adjoint(const Eigen::VectorXd& g) override;
  const Eigen::MatrixXd& majorant() override;

 private:
  struct Cube {
    CellBox box;
    double scale;  // |Q|^(alpha/n) / (#cells of Q)
  };
  Grid grid_;
  std::vector<Cube> cubes_;
  std::vector<std::uint32_t> selection_;
  Eigen::MatrixXd majorant_;
  bool have_majorant_ = false;
};

/// Upper bound for a nonnegative matrix from l^p to l^q (p <= q): the least
/// of the row Hoelder bound, the column (dual) Hoelder bound and the
/// Schur interpolation bound.
double matrix_upper_bound(const Eigen::MatrixXd& a, double p, double q);

/// Nonlinear power method for ||T||_{L^p(l1^p) -> L^q(l2^q)} with T >= 0 and
/// p <= q. The lower bound is nondecreasing in the iteration (asserted).
/// Sublinear operators are restarted from the constant, the majorant's
/// maximizer and seeded random positive vectors; the best run is kept.
NormBracket boyd_norm(PowerOperator& t, const NormSpaces& spaces, const BoydOptions& opts = {});
NormBracket boyd_norm(const Eigen::MatrixXd& m, const NormSpaces& spaces, const BoydOptions& opts = {});
/// Plain l^p -> l^q version for a nonnegative matrix.
NormBracket boyd_matrix(const Eigen::MatrixXd& a, double p, double q, const BoydOptions& opts = {});

struct SignedOptions {
  BoydOptions boyd{1e-12, 2000};
  int starts = 8;
  std::uint64_t seed = 1;
};

/// Bracket for a signed matrix operator: multi-start ascent for the lower
/// bound, boyd_norm of |M| for the upper bound.
NormBracket signed_norm(const Eigen::MatrixXd& m, const NormSpaces& spaces, const SignedOptions& opts = {});

}  // namespace bloomvmo
