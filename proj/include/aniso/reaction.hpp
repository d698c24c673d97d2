#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "aniso/error.hpp"
#include "aniso/types.hpp"

namespace aniso {

enum class ReactionKind { Power, Affine, Constant, Tabulated, WeightedPower };
enum class Monotonicity { StrictlyDecreasing, NonIncreasing, Other };

std::string to_string(ReactionKind kind);
std::string to_string(Monotonicity m);

// Declared growth envelope: sign(t) f(x, t) <= mu (|t| + theta)^{q-1}.
struct Envelope {
  double mu = 0.0;
  double theta = 0.0;
  double q = 1.0;
};

// Reaction term f(x, t) on the interior nodes of a domain. For t <= 0 every
// kind is extended by f(x, t) = f(x, 0).
class Reaction {
 public:
  // lambda t_+^exponent
  static Reaction power(double lambda, double exponent);
  // mu (t + theta)
  static Reaction affine(double mu, double theta);
  static Reaction constant(double value);
  // Piecewise linear through (t_k, values_k), t_0 = 0 and increasing,
  // constant beyond the last point.
  static Reaction tabulated(std::vector<double> t, std::vector<double> values);
  // a(x) t_+^exponent with one weight per interior node.
  static Reaction weighted_power(Vec weights, double exponent);

  ReactionKind kind() const { return kind_; }
  const Envelope& envelope() const { return envelope_; }
  Monotonicity monotonicity() const { return monotonicity_; }
  Reaction with_envelope(Envelope e) const;
  Reaction with_monotonicity(Monotonicity m) const;

  // True when f does not depend on t (the semi-linearized problem is then
  // independent of the iterate).
  bool t_independent() const;
  bool x_independent() const { return kind_ != ReactionKind::WeightedPower; }

  double eval(int node, double t) const;
  // F(x, t) = int_0^t f(x, s) ds.
  double primitive(int node, double t) const;

  Vec eval(const Vec& u) const;
  Vec primitive(const Vec& u) const;

  // max over sampled nodes and t in +-[1e-6, 1e6] of
  // sign(t) f - mu (|t| + theta)^{q-1}, relative to 1 + |rhs|. <= 0 when the
  // envelope holds.
  double envelope_violation(int num_nodes) const;
  // Sampled finite-difference check of t -> f / t^{p-1} on a log grid
  // against the declared class. Always true for Other.
  bool monotonicity_holds(double p, int num_nodes) const { return !monotonicity_witness(p, num_nodes); }
  // Consecutive sample points (t1 < t2) on a log grid where the declared
  // class fails.
  std::optional<std::array<double, 2>> monotonicity_witness(double p, int num_nodes) const;
  // Class implied by the formula for a given p (Other when it cannot be
  // decided in closed form).
  Monotonicity natural_monotonicity(double p) const;
  // True when f(x, t) >= 0 for t <= 0.
  bool nonnegative_below_zero(int num_nodes) const;

  void check_nodes(int num_nodes) const;

  nlohmann::json to_json() const;
  // `p` selects the default monotonicity class when none is declared.
  static Reaction from_json(const nlohmann::json& j, double p, const std::string& path = "");

 private:
  Reaction() = default;
  double weight(int node) const;

  ReactionKind kind_ = ReactionKind::Constant;
  double a_ = 0.0;  // lambda, mu or the constant
  double b_ = 0.0;  // exponent or theta
  std::vector<double> t_;
  std::vector<double> values_;
  Vec weights_;
  Envelope envelope_;
  Monotonicity monotonicity_ = Monotonicity::Other;
};

}  // namespace aniso
