#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "bloomvmo/norms.hpp"
#include "bloomvmo/oscillation.hpp"
#include "bloomvmo/sparse.hpp"

namespace bloomvmo {

/// Operators accepted by the diagnostics, by their CLI names.
enum class OperatorName {
  kMAlpha,
  kMAlphaB,
  kBracketBMAlpha,
  kIAlpha,
  kBracketBIAlpha,
  kTS,
  kTSAlpha,
  kTSBAlpha,
  kTSBAlphaStar,
};
OperatorName parse_operator(const std::string& name);
const char* to_string(OperatorName op);

// ---------------------------------------------------------------------------
// Compactness profile

struct ProfileSetting {
  double epsilon = 0.0;  // label of the setting; the measured gate is reported separately
  int qn_level = 0;      // Q_N is the cube of this level containing x0
  double delta = 0.0;
};

/// Default refinement ladder: Q_N of side 1/8, 1/4, 1/2, 1 with delta = 2^-4 ... 2^-7.
std::vector<ProfileSetting> default_ladder();

struct ProfileEntry {
  ProfileSetting setting;
  double n_side = 0.0;
  DyadicCube q_n;
  std::size_t count_i = 0, count_ii = 0, count_iii = 0;
  std::size_t finite_count = 0;
  std::size_t finite_rank = 0;     // dimension of span{chi_Q : Q finite}
  std::size_t operator_rank = 0;   // numerical rank of the finite operator itself
  double max_side_iii = 0.0;       // largest side among class III cubes
  double tail_oscillation = 0.0;   // max Osc_nu(b, Q) over tail cubes
  NormBracket tail;
};

struct CompactnessProfile {
  OperatorName op = OperatorName::kTSBAlphaStar;
  SparseFamily family;
  std::vector<ProfileEntry> entries;
  bool lower_monotone = true;   // tail lower brackets nonincreasing within 5%
  double decay_factor = 0.0;    // first lower / last lower
};

struct ProfileOptions {
  std::array<double, 2> x0{0.0, 0.0};
  double reference_exponent = -0.75;                  // power singularities of the reference function
  std::vector<std::array<double, 2>> reference_centers{{0.0, 0.0}, {0.5, 0.5}};
  double lambda = 1.5;                                // stopping threshold for the reference family
  BoydOptions boyd;
  bool compute_rank = true;
};

/// Reference sparse family on the standard lattice: Calderon-Zygmund stopping
/// cubes of a sum of power singularities.
SparseFamily profile_family(const Grid& g, const ProfileOptions& opts);

/// Tail operator norms under the (Q_N, delta) truncation. For T_S_b_alpha_star
/// the tail is (T^alpha_{S,b})^* restricted to classes I-III; for M_alpha_b and
/// bracket_b_I_alpha it is the sparse majorant T^alpha_{S,b} + (T^alpha_{S,b})^*
/// restricted the same way.
CompactnessProfile compactness_profile(OperatorName op, const GridFunction& b, const BloomTriple& t,
                                       const std::vector<ProfileSetting>& settings,
                                       const ProfileOptions& opts = {});

// ---------------------------------------------------------------------------
// Falsifier

enum class FailingCondition { kSmallScale, kLargeScale, kFarAway };
FailingCondition parse_condition(const std::string& name);
const char* to_string(FailingCondition c);

struct FalsifierStep {
  DyadicCube cube;
  CellBox box;
  CellBox partner;
  double radius = 0.0;
  double oscillation = 0.0;
  double median = 0.0;
  int branch = 1;  // which of E_{j,1}, E_{j,2} carries the oscillation
  std::vector<std::size_t> e1, e2, f1, f2, f1_tilde, f2_tilde;
  double f_tilde_fraction = 0.0;  // min(|F~_1|, |F~_2|) / |B~|
  std::vector<double> test_function;
  double test_norm = 0.0;    // ||f_j||_{L^p(l1^p)}
  double image_norm = 0.0;   // ||op f_j||_{L^q(l2^q)}
  double c_j = 0.0;          // l2^(-q')(B_j)^(-1/q') int_E |op f_j|
  double partner_gap = 0.0;
};

struct FalsifierReport {
  OperatorName op = OperatorName::kMAlphaB;
  FailingCondition condition = FailingCondition::kSmallScale;
  double epsilon0 = 0.0;
  std::vector<ScalePoint> curve;
  std::vector<FalsifierStep> steps;
  std::vector<std::vector<double>> separation;
  double min_image_norm = 0.0;
  double min_separation = 0.0;
  double norm_constant = 1.0;  // C with ||f_j|| in [1/C, C]
  bool decay_ok = true;
  bool measure_ok = true;
  bool disjoint_ok = true;
  bool sign_ok = true;
  bool partial = false;
  std::string warning;
};

struct FalsifierOptions {
  int max_scales = 4;
  double partner_factor = 4.0;
  std::array<double, 2> x0{0.5, 0.5};
};

/// Builds disjointly supported normalized test functions whose images stay
/// separated. Throws PreconditionError("b appears VMO at grid scales") when the
/// chosen modulus curve does not stall.
FalsifierReport falsify(const GridFunction& b, const BloomTriple& t, OperatorName op, FailingCondition condition,
                        const LatticeSet& lattices, const FalsifierOptions& opts = {});

nlohmann::json to_json(const NormBracket& b, bool with_witness = false);
nlohmann::json to_json(const CompactnessProfile& p);
nlohmann::json to_json(const FalsifierReport& r);
nlohmann::json cube_json(const DyadicCube& q);

}  // namespace bloomvmo
