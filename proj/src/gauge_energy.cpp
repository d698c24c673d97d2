#include "aniso/gauge_energy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace aniso {

namespace {

constexpr double kOrthoTol = 1e-12;
constexpr double kSymmetryTol = 1e-10;

// Enumerate vertices of K as feasible intersections of `dim` facet planes.
// Only used for N <= 3, where the number of combinations stays small.
double max_vertex_norm(const std::vector<Vec>& facets, int dim) {
  const int m = static_cast<int>(facets.size());
  std::vector<int> pick(dim);
  double best = 0.0;
  bool found = false;

  auto visit = [&](auto&& self, int start, int depth) -> void {
    if (depth == dim) {
      Mat a(dim, dim);
      for (int r = 0; r < dim; ++r) a.row(r) = facets[pick[r]].transpose();
      Eigen::FullPivLU<Mat> lu(a);
      if (lu.rank() < dim) return;
      const Vec x = lu.solve(Vec::Ones(dim));
      for (const auto& f : facets) {
        if (f.dot(x) > 1.0 + 1e-9) return;
      }
      best = std::max(best, x.norm());
      found = true;
      return;
    }
    for (int i = start; i < m; ++i) {
      pick[depth] = i;
      self(self, i + 1, depth + 1);
    }
  };
  visit(visit, 0, 0);
  if (!found) throw Error("gauge: convex body has no vertices (unbounded)");
  return best;
}

}  // namespace

std::vector<Vec> sample_directions(int dim) {
  std::vector<Vec> dirs;
  if (dim == 1) {
    dirs.push_back(Vec::Constant(1, 1.0));
    dirs.push_back(Vec::Constant(1, -1.0));
  } else if (dim == 2) {
    constexpr int n = 720;
    for (int k = 0; k < n; ++k) {
      const double t = 2.0 * std::numbers::pi * k / n;
      Vec e(2);
      e << std::cos(t), std::sin(t);
      dirs.push_back(e);
    }
  } else if (dim == 3) {
    constexpr int n = 2000;
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < n; ++k) {
      const double y = 1.0 - 2.0 * (k + 0.5) / n;
      const double r = std::sqrt(1.0 - y * y);
      Vec e(3);
      e << r * std::cos(golden * k), y, r * std::sin(golden * k);
      dirs.push_back(e);
    }
    for (int a = 0; a < 3; ++a) {
      for (double s : {1.0, -1.0}) {
        Vec e = Vec::Zero(3);
        e(a) = s;
        dirs.push_back(e);
      }
    }
  } else {
    for (int a = 0; a < dim; ++a) {
      for (double s : {1.0, -1.0}) {
        Vec e = Vec::Zero(dim);
        e(a) = s;
        dirs.push_back(e);
      }
    }
  }
  return dirs;
}

Gauge::Gauge(std::vector<Vec> facets) : facets_(std::move(facets)) {
  if (facets_.empty()) throw Error("gauge: no facets");
  dim_ = static_cast<int>(facets_.front().size());
  if (dim_ < 1) throw Error("gauge: dimension must be >= 1");
  for (const auto& a : facets_) {
    if (a.size() != dim_) throw Error("gauge: facet normals of mixed dimension");
    if (!a.allFinite()) throw Error("gauge: non-finite facet normal");
  }

  auto dirs = sample_directions(dim_);
  for (const auto& a : facets_) {
    if (a.norm() > 0) dirs.push_back(a.normalized());
  }
  double min_sampled = std::numeric_limits<double>::infinity();
  for (const auto& e : dirs) {
    const double m = eval(e);
    if (!(m > 0.0)) {
      throw Error("gauge: facet normals do not positively span R^" + std::to_string(dim_) +
                  " (origin not interior)");
    }
    min_sampled = std::min(min_sampled, m);
  }

  for (const auto& a : facets_) max_on_sphere_ = std::max(max_on_sphere_, a.norm());
  if (dim_ <= 3) {
    min_on_sphere_ = 1.0 / max_vertex_norm(facets_, dim_);
  } else {
    min_on_sphere_ = min_sampled;
  }
}

double Gauge::eval(const Vec& z) const {
  double m = -std::numeric_limits<double>::infinity();
  for (const auto& a : facets_) m = std::max(m, a.dot(z));
  return z.isZero(0.0) ? 0.0 : m;
}

std::vector<int> Gauge::active_facets(const Vec& z) const {
  const double m = eval(z);
  const double cut = m - 1e-12 * (1.0 + std::abs(m));
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(facets_.size()); ++i) {
    if (facets_[i].dot(z) >= cut) out.push_back(i);
  }
  return out;
}

Gauge Gauge::reflected() const {
  std::vector<Vec> neg;
  neg.reserve(facets_.size());
  for (const auto& a : facets_) neg.push_back(-a);
  return Gauge(std::move(neg));
}

std::string to_string(EnergyKind kind) {
  switch (kind) {
    case EnergyKind::Polytope: return "polytope";
    case EnergyKind::Euclidean: return "euclidean";
    case EnergyKind::OrthantQuadratic: return "orthant_quadratic";
    case EnergyKind::Reflected: return "reflected";
  }
  return "unknown";
}

Energy Energy::polytope(Gauge gauge, double p) {
  if (!(p >= 1.0) || !std::isfinite(p)) throw Error("energy: polytope requires p >= 1");
  Energy e;
  e.kind_ = EnergyKind::Polytope;
  e.p_ = p;
  e.dim_ = gauge.dim();
  e.gauge_ = std::make_shared<const Gauge>(std::move(gauge));
  e.strictly_convex_ = false;
  e.finalize_growth();
  return e;
}

Energy Energy::euclidean(int dim, double p, double scale) {
  if (dim < 1) throw Error("energy: euclidean requires dim >= 1");
  if (!(p >= 1.0) || !std::isfinite(p)) throw Error("energy: euclidean requires p >= 1");
  if (!(scale > 0.0) || !std::isfinite(scale)) throw Error("energy: euclidean scale must be > 0");
  Energy e;
  e.kind_ = EnergyKind::Euclidean;
  e.p_ = p;
  e.dim_ = dim;
  e.scale_ = scale;
  e.strictly_convex_ = p > 1.0;
  e.finalize_growth();
  return e;
}

Energy Energy::orthant_quadratic(std::array<double, 4> weights) {
  for (double w : weights) {
    if (!(w > 0.0) || !std::isfinite(w)) throw Error("energy: orthant-quadratic weights must be > 0");
  }
  Energy e;
  e.kind_ = EnergyKind::OrthantQuadratic;
  e.p_ = 2.0;
  e.dim_ = 2;
  e.weights_ = weights;
  e.strictly_convex_ = true;
  e.finalize_growth();
  return e;
}

Energy Energy::reflected(const Energy& inner) {
  const Energy& base = inner.canonical();
  Energy flipped;
  switch (base.kind_) {
    case EnergyKind::Polytope:
      flipped = polytope(base.gauge().reflected(), base.p_);
      break;
    case EnergyKind::Euclidean:
      flipped = euclidean(base.dim_, base.p_, base.scale_);
      break;
    case EnergyKind::OrthantQuadratic: {
      const auto& w = base.weights_;
      flipped = orthant_quadratic({w[1], w[0], w[3], w[2]});
      break;
    }
    case EnergyKind::Reflected:
      throw Error("energy: canonical energy cannot be reflected");
  }
  Energy e;
  e.kind_ = EnergyKind::Reflected;
  e.p_ = base.p_;
  e.dim_ = base.dim_;
  e.c_ = flipped.c_;
  e.d_ = flipped.d_;
  e.strictly_convex_ = flipped.strictly_convex_;
  e.inner_ = std::make_shared<const Energy>(inner);
  e.canonical_ = std::make_shared<const Energy>(std::move(flipped));
  return e;
}

void Energy::finalize_growth() {
  switch (kind_) {
    case EnergyKind::Polytope:
      c_ = std::pow(gauge_->min_on_sphere(), p_);
      d_ = std::pow(gauge_->max_on_sphere(), p_);
      break;
    case EnergyKind::Euclidean:
      c_ = d_ = scale_;
      break;
    case EnergyKind::OrthantQuadratic:
      c_ = *std::min_element(weights_.begin(), weights_.end());
      d_ = *std::max_element(weights_.begin(), weights_.end());
      break;
    case EnergyKind::Reflected:
      break;
  }
}

bool Energy::differentiable() const {
  const Energy& base = canonical();
  switch (base.kind_) {
    case EnergyKind::Euclidean: return base.p_ > 1.0;
    case EnergyKind::OrthantQuadratic: return true;
    default: return false;
  }
}

const Gauge& Energy::gauge() const {
  if (!gauge_) throw Error("energy: not a polytope gauge energy");
  return *gauge_;
}

const Energy& Energy::inner() const {
  if (!inner_) throw Error("energy: not a reflected energy");
  return *inner_;
}

const Energy& Energy::canonical() const { return canonical_ ? *canonical_ : *this; }

double Energy::eval(const Vec& z) const {
  switch (kind_) {
    case EnergyKind::Polytope: {
      const double m = gauge_->eval(z);
      return m <= 0.0 ? 0.0 : std::pow(m, p_);
    }
    case EnergyKind::Euclidean: {
      const double r = z.norm();
      return r == 0.0 ? 0.0 : scale_ * std::pow(r, p_);
    }
    case EnergyKind::OrthantQuadratic: {
      const auto& w = weights_;
      const double x = z(0);
      const double y = z(1);
      return x >= 0 ? w[0] * x * x + (y >= 0 ? w[2] * y * y : w[3] * y * y)
                    : w[1] * x * x + (y >= 0 ? w[2] * y * y : w[3] * y * y);
    }
    case EnergyKind::Reflected:
      return canonical_->eval(z);
  }
  return 0.0;
}

SubgradientSet Energy::subdiff(const Vec& z) const {
  if (z.size() != dim_) throw Error("subdiff: dimension mismatch");
  const bool at_origin = z.isZero(0.0);
  if (at_origin && p_ == 1.0) {
    throw Error("subdifferential is the full polar ball; unsupported");
  }
  SubgradientSet out;
  if (at_origin) {
    out.generators.push_back(Vec::Zero(dim_));
    return out;
  }
  switch (kind_) {
    case EnergyKind::Polytope: {
      const double m = gauge_->eval(z);
      const double factor = p_ * std::pow(m, p_ - 1.0);
      for (int i : gauge_->active_facets(z)) out.generators.push_back(factor * gauge_->facets()[i]);
      return out;
    }
    case EnergyKind::Euclidean: {
      const double r = z.norm();
      out.generators.push_back(p_ * scale_ * std::pow(r, p_ - 2.0) * z);
      return out;
    }
    case EnergyKind::OrthantQuadratic: {
      Vec g(2);
      Mat h;
      derivatives(z, g, h);
      out.generators.push_back(g);
      return out;
    }
    case EnergyKind::Reflected:
      return canonical_->subdiff(z);
  }
  return out;
}

void Energy::derivatives(const Vec& z, Vec& grad, Mat& hess, double floor) const {
  switch (kind_) {
    case EnergyKind::Euclidean: {
      const double r = std::max(z.norm(), floor);
      grad = z.isZero(0.0) ? Vec::Zero(dim_) : Vec(p_ * scale_ * std::pow(r, p_ - 2.0) * z);
      const Vec unit = z.isZero(0.0) ? Vec::Zero(dim_) : Vec(z / z.norm());
      hess = p_ * scale_ * std::pow(r, p_ - 2.0) *
             (Mat::Identity(dim_, dim_) + (p_ - 2.0) * unit * unit.transpose());
      return;
    }
    case EnergyKind::OrthantQuadratic: {
      const auto& w = weights_;
      grad.resize(2);
      hess = Mat::Zero(2, 2);
      for (int a = 0; a < 2; ++a) {
        const double t = z(a);
        const double wp = w[2 * a];
        const double wm = w[2 * a + 1];
        grad(a) = t > 0 ? 2.0 * wp * t : 2.0 * wm * t;
        hess(a, a) = t > 0 ? 2.0 * wp : (t < 0 ? 2.0 * wm : 2.0 * std::max(wp, wm));
      }
      return;
    }
    case EnergyKind::Reflected:
      canonical_->derivatives(z, grad, hess, floor);
      return;
    case EnergyKind::Polytope:
      break;
  }
  throw Error("energy: derivatives requested for a non-differentiable kind");
}

nlohmann::json Energy::to_json() const {
  nlohmann::json j;
  j["kind"] = to_string(kind_);
  j["p"] = p_;
  switch (kind_) {
    case EnergyKind::Polytope: {
      auto facets = nlohmann::json::array();
      for (const auto& a : gauge_->facets()) facets.push_back(std::vector<double>(a.data(), a.data() + a.size()));
      j["facets"] = facets;
      break;
    }
    case EnergyKind::Euclidean:
      j["dim"] = dim_;
      j["scale"] = scale_;
      break;
    case EnergyKind::OrthantQuadratic:
      j["weights"] = weights_;
      break;
    case EnergyKind::Reflected:
      j["inner"] = inner_->to_json();
      break;
  }
  return j;
}

Energy Energy::from_json(const nlohmann::json& j, const std::string& path) {
  if (!j.is_object()) throw SchemaError(path, "energy must be an object");
  if (!j.contains("kind") || !j["kind"].is_string()) throw SchemaError(path + "/kind", "missing or not a string");
  const std::string kind = j["kind"];

  auto number = [&](const char* key, double fallback, bool required) {
    if (!j.contains(key)) {
      if (required) throw SchemaError(path + "/" + key, "missing");
      return fallback;
    }
    if (!j[key].is_number()) throw SchemaError(path + "/" + key, "expected a number");
    return j[key].get<double>();
  };

  try {
    if (kind == "polytope") {
      const double p = number("p", 2.0, true);
      if (!j.contains("facets") || !j["facets"].is_array() || j["facets"].empty()) {
        throw SchemaError(path + "/facets", "expected a non-empty array of normals");
      }
      std::vector<Vec> facets;
      for (std::size_t i = 0; i < j["facets"].size(); ++i) {
        const auto& row = j["facets"][i];
        const std::string at = path + "/facets/" + std::to_string(i);
        if (!row.is_array() || row.empty()) throw SchemaError(at, "expected a non-empty array of numbers");
        Vec a(static_cast<Eigen::Index>(row.size()));
        for (std::size_t k = 0; k < row.size(); ++k) {
          if (!row[k].is_number()) throw SchemaError(at + "/" + std::to_string(k), "expected a number");
          a(static_cast<Eigen::Index>(k)) = row[k].get<double>();
        }
        facets.push_back(a);
      }
      return polytope(Gauge(std::move(facets)), p);
    }
    if (kind == "euclidean") {
      const double p = number("p", 2.0, true);
      const double dim = number("dim", 1.0, false);
      const double scale = number("scale", 1.0, false);
      return euclidean(static_cast<int>(dim), p, scale);
    }
    if (kind == "orthant_quadratic") {
      if (j.contains("p") && number("p", 2.0, false) != 2.0) {
        throw SchemaError(path + "/p", "orthant_quadratic is 2-homogeneous");
      }
      if (!j.contains("weights") || !j["weights"].is_array() || j["weights"].size() != 4) {
        throw SchemaError(path + "/weights", "expected 4 numbers");
      }
      std::array<double, 4> w{};
      for (int i = 0; i < 4; ++i) {
        if (!j["weights"][i].is_number()) {
          throw SchemaError(path + "/weights/" + std::to_string(i), "expected a number");
        }
        w[i] = j["weights"][i].get<double>();
      }
      return orthant_quadratic(w);
    }
    if (kind == "reflected") {
      if (!j.contains("inner")) throw SchemaError(path + "/inner", "missing");
      return reflected(from_json(j["inner"], path + "/inner"));
    }
  } catch (const SchemaError&) {
    throw;
  } catch (const Error& e) {
    throw SchemaError(path, e.what());
  }
  throw SchemaError(path + "/kind", "unknown energy kind '" + kind + "'");
}

double euler_defect(const Energy& energy, const Vec& z, const Vec& xi) {
  return energy.p() * energy.eval(z) - xi.dot(z);
}

namespace {

std::vector<Vec> coarse_directions(int dim) {
  std::vector<Vec> dirs;
  if (dim == 2) {
    for (int k = 0; k < 32; ++k) {
      const double t = 2.0 * std::numbers::pi * k / 32;
      Vec e(2);
      e << std::cos(t), std::sin(t);
      dirs.push_back(e);
    }
    return dirs;
  }
  for (int x = -1; x <= 1; ++x) {
    for (int y = -1; y <= 1; ++y) {
      for (int z = -1; z <= 1; ++z) {
        if (x == 0 && y == 0 && z == 0) continue;
        Vec e(3);
        e << x, y, z;
        dirs.push_back(e.normalized());
      }
    }
  }
  return dirs;
}

}  // namespace

double subgradient_defect(const Energy& energy, const Vec& z, const Vec& xi) {
  double worst = std::abs(euler_defect(energy, z, xi)) / (1.0 + energy.eval(z));
  const double radius = 1e-3 * (1.0 + z.norm());
  const double hz = energy.eval(z);
  static const std::vector<Vec> probes[4] = {{}, sample_directions(1), coarse_directions(2), coarse_directions(3)};
  if (energy.dim() < 1 || energy.dim() > 3) throw Error("subgradient_defect: unsupported dimension");
  for (const Vec& dir : probes[energy.dim()]) {
    const Vec w = radius * dir;
    worst = std::max(worst, (xi.dot(w) - energy.eval(z + w) + hz) / radius);
  }
  return worst;
}

bool symmetry_check(const Energy& energy, const Mat& transform) {
  const int n = energy.dim();
  if (transform.rows() != n || transform.cols() != n) throw Error("symmetry_check: dimension mismatch");
  const double ortho = (transform.transpose() * transform - Mat::Identity(n, n)).cwiseAbs().maxCoeff();
  if (ortho > kOrthoTol) throw Error("symmetry_check: transform is not orthogonal");

  const Energy& base = energy.canonical();
  if (base.kind() == EnergyKind::Polytope) {
    const auto& facets = base.gauge().facets();
    std::vector<bool> used(facets.size(), false);
    for (const auto& a : facets) {
      const Vec mapped = transform.transpose() * a;
      bool matched = false;
      for (std::size_t k = 0; k < facets.size(); ++k) {
        if (!used[k] && (facets[k] - mapped).cwiseAbs().maxCoeff() <= kSymmetryTol) {
          used[k] = matched = true;
          break;
        }
      }
      if (!matched) return false;
    }
    return true;
  }

  for (const auto& e : sample_directions(n)) {
    const double h0 = energy.eval(e);
    const double h1 = energy.eval(transform * e);
    if (std::abs(h1 - h0) > kSymmetryTol * (1.0 + std::abs(h0))) return false;
  }
  return true;
}

}  // namespace aniso
