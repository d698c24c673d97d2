#include "aniso/reaction.hpp"

#include <algorithm>
#include <cmath>

namespace aniso {

namespace {

// Class of c t^e on t > 0.
Monotonicity term_class(double c, double e) {
  if (c == 0.0 || e == 0.0) return Monotonicity::NonIncreasing;
  if ((c > 0.0 && e < 0.0) || (c < 0.0 && e > 0.0)) return Monotonicity::StrictlyDecreasing;
  return Monotonicity::Other;
}

Monotonicity combine(Monotonicity a, Monotonicity b) {
  if (a == Monotonicity::Other || b == Monotonicity::Other) return Monotonicity::Other;
  if (a == Monotonicity::StrictlyDecreasing || b == Monotonicity::StrictlyDecreasing) {
    return Monotonicity::StrictlyDecreasing;
  }
  return Monotonicity::NonIncreasing;
}

// Worst case over nodes: every node must satisfy the class.
Monotonicity weaker(Monotonicity a, Monotonicity b) {
  if (a == Monotonicity::Other || b == Monotonicity::Other) return Monotonicity::Other;
  if (a == Monotonicity::NonIncreasing || b == Monotonicity::NonIncreasing) return Monotonicity::NonIncreasing;
  return Monotonicity::StrictlyDecreasing;
}

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw Error(std::string("reaction: ") + what + " must be finite");
}

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> out;
  for (int k = 0; k < n; ++k) out.push_back(lo * std::pow(hi / lo, double(k) / (n - 1)));
  return out;
}

std::vector<int> sample_nodes(int num_nodes) {
  std::vector<int> out;
  const int step = std::max(1, num_nodes / 64);
  for (int k = 0; k < num_nodes; k += step) out.push_back(k);
  return out;
}

}  // namespace

std::string to_string(ReactionKind kind) {
  switch (kind) {
    case ReactionKind::Power: return "power";
    case ReactionKind::Affine: return "affine";
    case ReactionKind::Constant: return "constant";
    case ReactionKind::Tabulated: return "tabulated";
    case ReactionKind::WeightedPower: return "weighted_power";
  }
  return "unknown";
}

std::string to_string(Monotonicity m) {
  switch (m) {
    case Monotonicity::StrictlyDecreasing: return "strictly_decreasing";
    case Monotonicity::NonIncreasing: return "non_increasing";
    case Monotonicity::Other: return "other";
  }
  return "unknown";
}

Reaction Reaction::power(double lambda, double exponent) {
  require_finite(lambda, "lambda");
  require_finite(exponent, "exponent");
  if (exponent < 0.0) throw Error("reaction: exponent must be >= 0");
  Reaction r;
  r.kind_ = ReactionKind::Power;
  r.a_ = lambda;
  r.b_ = exponent;
  r.envelope_ = {std::max(lambda, 0.0), 0.0, exponent + 1.0};
  return r;
}

Reaction Reaction::affine(double mu, double theta) {
  require_finite(mu, "mu");
  require_finite(theta, "theta");
  Reaction r;
  r.kind_ = ReactionKind::Affine;
  r.a_ = mu;
  r.b_ = theta;
  r.envelope_ = {std::abs(mu), std::abs(theta), 2.0};
  return r;
}

Reaction Reaction::constant(double value) {
  require_finite(value, "value");
  Reaction r;
  r.kind_ = ReactionKind::Constant;
  r.a_ = value;
  r.envelope_ = {std::abs(value), 0.0, 1.0};
  return r;
}

Reaction Reaction::tabulated(std::vector<double> t, std::vector<double> values) {
  if (t.size() < 2 || t.size() != values.size()) throw Error("reaction: tabulated needs >= 2 matching points");
  if (t.front() != 0.0) throw Error("reaction: tabulated grid must start at t = 0");
  for (std::size_t k = 0; k < t.size(); ++k) {
    require_finite(t[k], "table entries");
    require_finite(values[k], "table entries");
    if (k > 0 && !(t[k] > t[k - 1])) throw Error("reaction: tabulated grid must be increasing");
  }
  Reaction r;
  r.kind_ = ReactionKind::Tabulated;
  double bound = 0.0;
  for (double v : values) bound = std::max(bound, std::abs(v));
  r.t_ = std::move(t);
  r.values_ = std::move(values);
  r.envelope_ = {bound, 0.0, 1.0};
  return r;
}

Reaction Reaction::weighted_power(Vec weights, double exponent) {
  require_finite(exponent, "exponent");
  if (exponent < 0.0) throw Error("reaction: exponent must be >= 0");
  if (weights.size() == 0 || !weights.allFinite()) throw Error("reaction: weights must be finite and non-empty");
  Reaction r;
  r.kind_ = ReactionKind::WeightedPower;
  r.b_ = exponent;
  r.envelope_ = {std::max(weights.maxCoeff(), 0.0), 0.0, exponent + 1.0};
  r.weights_ = std::move(weights);
  return r;
}

Reaction Reaction::with_envelope(Envelope e) const {
  if (!(e.mu >= 0.0) || !(e.theta >= 0.0) || !(e.q >= 1.0) || !std::isfinite(e.mu + e.theta + e.q)) {
    throw Error("reaction: envelope needs mu >= 0, theta >= 0, q >= 1");
  }
  Reaction r = *this;
  r.envelope_ = e;
  return r;
}

Reaction Reaction::with_monotonicity(Monotonicity m) const {
  Reaction r = *this;
  r.monotonicity_ = m;
  return r;
}

bool Reaction::t_independent() const {
  if (kind_ == ReactionKind::Constant) return true;
  if (kind_ == ReactionKind::Affine) return a_ == 0.0;
  if (kind_ == ReactionKind::Power) return a_ == 0.0;
  return false;
}

double Reaction::weight(int node) const {
  if (kind_ != ReactionKind::WeightedPower) return a_;
  if (node < 0 || node >= weights_.size()) throw Error("reaction: node index outside the weight table");
  return weights_(node);
}

double Reaction::eval(int node, double t) const {
  switch (kind_) {
    case ReactionKind::Power:
    case ReactionKind::WeightedPower: {
      const double a = weight(node);
      if (t > 0.0) return a * std::pow(t, b_);
      return b_ == 0.0 ? a : 0.0;
    }
    case ReactionKind::Affine: return a_ * (std::max(t, 0.0) + b_);
    case ReactionKind::Constant: return a_;
    case ReactionKind::Tabulated: {
      if (t <= 0.0) return values_.front();
      if (t >= t_.back()) return values_.back();
      const auto it = std::upper_bound(t_.begin(), t_.end(), t);
      const std::size_t k = static_cast<std::size_t>(it - t_.begin());
      const double s = (t - t_[k - 1]) / (t_[k] - t_[k - 1]);
      return (1.0 - s) * values_[k - 1] + s * values_[k];
    }
  }
  return 0.0;
}

double Reaction::primitive(int node, double t) const {
  if (t <= 0.0) return eval(node, 0.0) * t;
  switch (kind_) {
    case ReactionKind::Power:
    case ReactionKind::WeightedPower: return weight(node) * std::pow(t, b_ + 1.0) / (b_ + 1.0);
    case ReactionKind::Affine: return a_ * (0.5 * t * t + b_ * t);
    case ReactionKind::Constant: return a_ * t;
    case ReactionKind::Tabulated: {
      // Exact for the piecewise linear interpolant.
      double total = 0.0;
      for (std::size_t k = 1; k < t_.size() && t_[k - 1] < t; ++k) {
        const double hi = std::min(t, t_[k]);
        total += 0.5 * (hi - t_[k - 1]) * (values_[k - 1] + eval(node, hi));
      }
      if (t > t_.back()) total += (t - t_.back()) * values_.back();
      return total;
    }
  }
  return 0.0;
}

Vec Reaction::eval(const Vec& u) const {
  check_nodes(static_cast<int>(u.size()));
  Vec out(u.size());
  for (int k = 0; k < u.size(); ++k) out(k) = eval(k, u(k));
  return out;
}

Vec Reaction::primitive(const Vec& u) const {
  check_nodes(static_cast<int>(u.size()));
  Vec out(u.size());
  for (int k = 0; k < u.size(); ++k) out(k) = primitive(k, u(k));
  return out;
}

void Reaction::check_nodes(int num_nodes) const {
  if (kind_ == ReactionKind::WeightedPower && weights_.size() != num_nodes) {
    throw Error("reaction: weighted_power has " + std::to_string(weights_.size()) + " weights for " +
                std::to_string(num_nodes) + " nodes");
  }
}

double Reaction::envelope_violation(int num_nodes) const {
  check_nodes(num_nodes);
  double worst = -1.0;
  for (int node : sample_nodes(num_nodes)) {
    for (double s : log_grid(1e-6, 1e6, 121)) {
      for (double t : {s, -s}) {
        const double lhs = (t > 0 ? 1.0 : -1.0) * eval(node, t);
        const double rhs = envelope_.mu * std::pow(std::abs(t) + envelope_.theta, envelope_.q - 1.0);
        worst = std::max(worst, (lhs - rhs) / (1.0 + std::abs(rhs)));
      }
    }
  }
  return worst;
}

Monotonicity Reaction::natural_monotonicity(double p) const {
  switch (kind_) {
    case ReactionKind::Power: return term_class(a_, b_ - (p - 1.0));
    case ReactionKind::Constant: return term_class(a_, 1.0 - p);
    case ReactionKind::Affine: return combine(term_class(a_, 2.0 - p), term_class(a_ * b_, 1.0 - p));
    case ReactionKind::WeightedPower: {
      Monotonicity m = Monotonicity::StrictlyDecreasing;
      for (int k = 0; k < weights_.size(); ++k) m = weaker(m, term_class(weights_(k), b_ - (p - 1.0)));
      return m;
    }
    case ReactionKind::Tabulated: return Monotonicity::Other;
  }
  return Monotonicity::Other;
}

std::optional<std::array<double, 2>> Reaction::monotonicity_witness(double p, int num_nodes) const {
  if (monotonicity_ == Monotonicity::Other) return std::nullopt;
  check_nodes(num_nodes);
  const bool strict = monotonicity_ == Monotonicity::StrictlyDecreasing;
  for (int node : sample_nodes(num_nodes)) {
    const auto grid = log_grid(1e-4, 1e4, 161);
    double prev = eval(node, grid[0]) / std::pow(grid[0], p - 1.0);
    for (std::size_t k = 1; k < grid.size(); ++k) {
      const double r = eval(node, grid[k]) / std::pow(grid[k], p - 1.0);
      if (strict ? !(r < prev) : r > prev + 1e-12 * (1.0 + std::abs(prev))) return std::array{grid[k - 1], grid[k]};
      prev = r;
    }
  }
  return std::nullopt;
}

bool Reaction::nonnegative_below_zero(int num_nodes) const {
  check_nodes(num_nodes);
  for (int node : sample_nodes(num_nodes)) {
    if (eval(node, 0.0) < 0.0) return false;
  }
  if (kind_ == ReactionKind::WeightedPower) return b_ > 0.0 || weights_.minCoeff() >= 0.0;
  return true;
}

nlohmann::json Reaction::to_json() const {
  nlohmann::json j;
  j["kind"] = to_string(kind_);
  switch (kind_) {
    case ReactionKind::Power:
      j["lambda"] = a_;
      j["exponent"] = b_;
      break;
    case ReactionKind::Affine:
      j["mu"] = a_;
      j["theta"] = b_;
      break;
    case ReactionKind::Constant: j["value"] = a_; break;
    case ReactionKind::Tabulated:
      j["t"] = t_;
      j["values"] = values_;
      break;
    case ReactionKind::WeightedPower:
      j["weights"] = std::vector<double>(weights_.data(), weights_.data() + weights_.size());
      j["exponent"] = b_;
      break;
  }
  j["envelope"] = {{"mu", envelope_.mu}, {"theta", envelope_.theta}, {"q", envelope_.q}};
  j["monotonicity"] = to_string(monotonicity_);
  return j;
}

Reaction Reaction::from_json(const nlohmann::json& j, double p, const std::string& path) {
  if (!j.is_object()) throw SchemaError(path, "expected an object");
  auto number = [&](const nlohmann::json& obj, const std::string& key, const std::string& at) {
    if (!obj.contains(key)) throw SchemaError(at + "/" + key, "missing");
    if (!obj[key].is_number()) throw SchemaError(at + "/" + key, "expected a number");
    return obj[key].get<double>();
  };
  auto numbers = [&](const std::string& key) {
    if (!j.contains(key) || !j[key].is_array()) throw SchemaError(path + "/" + key, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t k = 0; k < j[key].size(); ++k) {
      if (!j[key][k].is_number()) throw SchemaError(path + "/" + key + "/" + std::to_string(k), "expected a number");
      out.push_back(j[key][k].get<double>());
    }
    return out;
  };
  if (!j.contains("kind") || !j["kind"].is_string()) throw SchemaError(path + "/kind", "expected a string");
  const std::string kind = j["kind"].get<std::string>();
  Reaction r;
  try {
    if (kind == "power") {
      r = power(number(j, "lambda", path), number(j, "exponent", path));
    } else if (kind == "affine") {
      r = affine(number(j, "mu", path), number(j, "theta", path));
    } else if (kind == "constant") {
      r = constant(number(j, "value", path));
    } else if (kind == "tabulated") {
      r = tabulated(numbers("t"), numbers("values"));
    } else if (kind == "weighted_power") {
      const auto w = numbers("weights");
      r = weighted_power(Eigen::Map<const Vec>(w.data(), static_cast<Eigen::Index>(w.size())),
                         number(j, "exponent", path));
    } else {
      throw SchemaError(path + "/kind", "unknown reaction kind '" + kind + "'");
    }
    if (j.contains("envelope")) {
      const auto& e = j["envelope"];
      if (!e.is_object()) throw SchemaError(path + "/envelope", "expected an object");
      const std::string at = path + "/envelope";
      r = r.with_envelope({number(e, "mu", at), number(e, "theta", at), number(e, "q", at)});
    }
    r.monotonicity_ = r.natural_monotonicity(p);
    if (j.contains("monotonicity")) {
      const auto& m = j["monotonicity"];
      const std::string at = path + "/monotonicity";
      if (!m.is_string()) throw SchemaError(at, "expected a string");
      const std::string s = m.get<std::string>();
      if (s == "strictly_decreasing") r.monotonicity_ = Monotonicity::StrictlyDecreasing;
      else if (s == "non_increasing") r.monotonicity_ = Monotonicity::NonIncreasing;
      else if (s == "other") r.monotonicity_ = Monotonicity::Other;
      else throw SchemaError(at, "unknown class '" + s + "'");
    }
  } catch (const SchemaError&) {
    throw;
  } catch (const Error& e) {
    throw SchemaError(path, e.what());
  }
  return r;
}

}  // namespace aniso
