#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "json.hpp"

#include "bloomvmo/grid.hpp"

namespace bloomvmo {

/// Strictly positive grid function with cached prefix tables of its powers.
/// Copies share the cache; values never change after construction.
class Weight {
 public:
  explicit Weight(GridFunction values);

  const GridFunction& function() const { return values_; }
  const Grid& grid() const { return values_.grid(); }
  double operator[](std::size_t i) const { return values_[i]; }

  /// Prefix table of w^s.
  const PrefixTable& power_table(double s) const;
  /// Integral of w^s over a box.
  double integral(const CellBox& box, double s = 1.0) const { return power_table(s).integral(box); }
  double average(const CellBox& box, double s = 1.0) const { return power_table(s).average(box); }
  void warm(std::initializer_list<double> exponents) const;

  Weight pow(double s) const;
  Weight scaled(double c) const;

 private:
  struct Cache {
    std::mutex mu;
    std::map<double, std::unique_ptr<PrefixTable>> tables;
  };
  GridFunction values_;
  std::shared_ptr<Cache> cache_;
};

inline double conjugate(double p) { return p / (p - 1.0); }

/// Exponents and weights for two-weight estimates L^p(l1^p) -> L^q(l2^q).
/// q is always derived from 1/p - 1/q = alpha/n.
class BloomTriple {
 public:
  static BloomTriple make(double alpha, double p, Weight lambda1, Weight lambda2);
  /// Checks a caller-provided q against the exponent relation (1e-12).
  static BloomTriple with_q(double alpha, double p, double q, Weight lambda1, Weight lambda2);

  double alpha() const { return alpha_; }
  double p() const { return p_; }
  double q() const { return q_; }
  double p_conj() const { return conjugate(p_); }
  double q_conj() const { return conjugate(q_); }
  int dim() const { return lambda1_.grid().dim(); }
  const Weight& lambda1() const { return lambda1_; }
  const Weight& lambda2() const { return lambda2_; }
  const Weight& nu() const { return nu_; }

 private:
  BloomTriple(double a, double p, double q, Weight l1, Weight l2, Weight nu);
  double alpha_, p_, q_;
  Weight lambda1_, lambda2_, nu_;
};

struct Characteristic {
  double value = 1.0;
  DyadicCube argmax;
};

/// sup over cubes of <w>_Q <w^(1-p')>_Q^(p-1).
Characteristic ap_characteristic(const Weight& w, double p, const LatticeSet& lattices);
/// sup over cubes of <w^q>_Q <w^(-p')>_Q^(q/p').
Characteristic apq_characteristic(const Weight& w, double p, double q, const LatticeSet& lattices);

struct DoublingFit {
  double c1 = 1.0;
  double c2 = 1.0;
  double sigma = 1.0;
  bool admissible = false;
  std::size_t pairs = 0;
};

/// Empirical constants in C1 (|E|/|B|)^p <= w(E)/w(B) <= C2 (|E|/|B|)^sigma over
/// all (dyadic subcube, ancestor) pairs. sigma is the largest value on the grid
/// {0.05, 0.10, ..., 1.0} with C2 <= 100.
DoublingFit doubling_exponents(const Weight& w, double p, const LatticeSet& lattices);

/// Pointwise l1/l2; rejects divisors below 1e-300.
Weight bloom_quotient(const Weight& lambda1, const Weight& lambda2);

/// Weight generators. Spec examples:
///   {"kind":"constant","c":2}
///   {"kind":"power","a":0.5,"center":0.3}        cell average of |x-c|^a
///   {"kind":"step","breakpoint":0.5,"low":1,"high":10}
///   {"kind":"product","factors":[spec, spec, ...]}
Weight make_weight(const Grid& g, const nlohmann::json& spec);
Weight constant_weight(const Grid& g, double c);
Weight power_weight(const Grid& g, double a, std::array<double, 2> center);
Weight step_weight(const Grid& g, double breakpoint, double low, double high);

}  // namespace bloomvmo
