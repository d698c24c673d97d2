#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "aniso/error.hpp"
#include "aniso/types.hpp"

namespace aniso {

// Convex body K = {z : (a_i, z) <= 1 for all i} given by its facet normals.
// Construction rejects normal sets that do not positively span R^N, so the
// Minkowski functional max_i (a_i, z) is positive away from the origin.
class Gauge {
 public:
  explicit Gauge(std::vector<Vec> facets);

  int dim() const { return dim_; }
  const std::vector<Vec>& facets() const { return facets_; }

  double eval(const Vec& z) const;

  // Indices i with (a_i, z) >= M_K(z) - 1e-12 (1 + |M_K(z)|), ascending.
  std::vector<int> active_facets(const Vec& z) const;

  Gauge reflected() const;

  // Largest and smallest value of M_K on the unit sphere.
  double max_on_sphere() const { return max_on_sphere_; }
  double min_on_sphere() const { return min_on_sphere_; }

 private:
  std::vector<Vec> facets_;
  int dim_;
  double max_on_sphere_ = 0.0;
  double min_on_sphere_ = 0.0;
};

// Deterministic unit directions used by sampled checks (N = 1, 2, 3).
std::vector<Vec> sample_directions(int dim);

enum class EnergyKind { Polytope, Euclidean, OrthantQuadratic, Reflected };

struct SubgradientSet {
  std::vector<Vec> generators;
  bool exact = true;
};

// Convex, positively p-homogeneous energy H with c|z|^p <= H(z) <= d|z|^p.
//
// Reflected energies store their parent for reporting but evaluate through
// a materialized "canonical" energy of one of the three base kinds: the
// reflection of a polytope gauge negates the normals, the reflection of an
// orthant-quadratic swaps each weight pair, and the euclidean kind is even.
class Energy {
 public:
  static Energy polytope(Gauge gauge, double p);
  static Energy euclidean(int dim, double p, double scale = 1.0);
  // H(x, y) = w0 x_+^2 + w1 x_-^2 + w2 y_+^2 + w3 y_-^2, all weights > 0.
  static Energy orthant_quadratic(std::array<double, 4> weights);
  static Energy reflected(const Energy& inner);

  EnergyKind kind() const { return kind_; }
  double p() const { return p_; }
  int dim() const { return dim_; }
  double c() const { return c_; }
  double d() const { return d_; }
  bool strictly_convex() const { return strictly_convex_; }
  bool differentiable() const;

  const Gauge& gauge() const;
  const std::array<double, 4>& weights() const { return weights_; }
  double scale() const { return scale_; }
  const Energy& inner() const;
  const Energy& canonical() const;

  double eval(const Vec& z) const;
  SubgradientSet subdiff(const Vec& z) const;

  // Gradient and Hessian for differentiable kinds. The Hessian of
  // s|z|^p is unbounded at z = 0 when p < 2; it is evaluated at
  // |z| = floor instead.
  void derivatives(const Vec& z, Vec& grad, Mat& hess, double floor = 1e-12) const;

  nlohmann::json to_json() const;
  static Energy from_json(const nlohmann::json& j, const std::string& path = "");

 private:
  Energy() = default;
  void finalize_growth();

  EnergyKind kind_ = EnergyKind::Euclidean;
  double p_ = 2.0;
  int dim_ = 1;
  double c_ = 1.0;
  double d_ = 1.0;
  bool strictly_convex_ = true;
  double scale_ = 1.0;
  std::array<double, 4> weights_{1.0, 1.0, 1.0, 1.0};
  std::shared_ptr<const Gauge> gauge_;
  std::shared_ptr<const Energy> inner_;
  std::shared_ptr<const Energy> canonical_;
};

std::string to_string(EnergyKind kind);

// p H(z) - (xi, z). Nonnegative for genuine subgradients.
double euler_defect(const Energy& energy, const Vec& z, const Vec& xi);

// Worst violation of xi in dH(z): max of |euler_defect| and the scaled
// subgradient-inequality violation (xi.w - H(z+w) + H(z)) / |w| over sampled
// directions at radius 1e-3 (1 + |z|). Zero up to round-off for genuine
// subgradients.
double subgradient_defect(const Energy& energy, const Vec& z, const Vec& xi);

// Checks H(Tz) = H(z). Exact set comparison of {T^t a_i} for polytope
// gauges, sampled otherwise. Throws if T is not orthogonal.
bool symmetry_check(const Energy& energy, const Mat& transform);

}  // namespace aniso
