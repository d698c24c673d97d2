#include "aniso/bounds.hpp"

#include <cmath>
#include <limits>

namespace aniso {

namespace {

constexpr double kSlack = 1.05;

void require_finite(double x, const char* name) {
  if (!std::isfinite(x)) throw Error(std::string("non-finite parameter ") + name);
}

}  // namespace

double critical_exponent(int dim, double p) {
  if (p >= dim) return std::numeric_limits<double>::infinity();
  return dim * p / (dim - p);
}

double gn_constant(int dim, double p, double q) {
  if (dim < 2) throw Error("GN form requires N >= 2");
  if (p < 1.0 || q < 1.0) throw Error("gn_constant: need p >= 1 and q >= 1");
  return (q * p + p - q) / p / (dim * std::pow(unit_ball_measure(dim), 1.0 / dim));
}

GNCheck gn_verify(const ScalarField& u, double p, double q) {
  const Domain& d = u.domain();
  const int n = d.dim();
  if (n != 2) throw Error("gn_verify: needs a 2D domain");
  if (u.max_abs() == 0.0) throw Error("gn_verify: zero field");
  const double exponent = n * (q * p + p - q) / ((n - 1) * p);
  const Vec a = u.values().cwiseAbs();
  const double lhs = std::pow(integrate(a.array().pow(exponent).matrix(), d), (n - 1.0) / n);

  const Mat du = gradient(u).values();
  Vec grad_p(du.cols());
  for (int c = 0; c < du.cols(); ++c) grad_p(c) = std::pow(du.col(c).norm(), p);
  const double dirichlet = std::pow(integrate_cells(grad_p, d), 1.0 / p);
  const double lq = integrate(a.array().pow(q).matrix(), d);
  const double rhs = gn_constant(n, p, q) * dirichlet * std::pow(lq, (p - 1.0) / p);
  return {lhs, rhs, lhs / rhs};
}

double IterationParams::A() const { return std::pow(4.0, beta + delta); }

void IterationParams::validate() const {
  for (auto [x, name] : {std::pair{b, "b"}, {beta, "beta"}, {gamma, "gamma"}, {delta, "delta"}, {q, "q"}, {h0, "h0"}}) {
    require_finite(x, name);
  }
  if (b < 0.0 || beta < 0.0 || delta < 0.0) throw Error("iteration parameters b, beta, delta must be >= 0");
  if (!(gamma > 0.0)) throw Error("iteration parameter gamma must be > 0");
  if (q < 1.0) throw Error("iteration parameter q must be >= 1");
  if (!(h0 > 0.0)) throw Error("iteration parameter h0 must be > 0");
}

double degiorgi_clause(const IterationParams& params, double i0) {
  params.validate();
  if (params.beta == 0.0) throw Error("only qualitative boundedness; no formula");
  if (i0 < 0.0) throw Error("degiorgi_sup: I0 must be >= 0");
  const double g = params.gamma;
  const double bt = params.beta;
  if (params.b == 0.0 || i0 == 0.0) return 0.0;
  // Logarithms keep b^{1/gamma} from overflowing for small gamma.
  const double log_m = (g + 1.0) / (g * bt) * std::log(params.A()) +
                       g / bt * (std::log(params.b) / g + std::log(i0));
  return std::exp(log_m);
}

double degiorgi_sup(const IterationParams& params, double i0) {
  return std::max(2.0 * params.h0, degiorgi_clause(params, i0));
}

IterationParams sup_bound_params(double c, double mu, double theta, int dim, double p, double q) {
  if (!(c > 0.0)) throw Error("theorem_sup_bound: c must be > 0");
  if (mu < 0.0 || theta < 0.0) throw Error("theorem_sup_bound: mu and theta must be >= 0");
  if (dim < 2) throw Error("GN form requires N >= 2");
  if (q >= critical_exponent(dim, p)) throw Error("exponent beta vanishes at q = p*");
  const double s = q * p + p - q;
  const double big_c = std::pow(std::pow(4.0, q - 1.0) * std::pow(gn_constant(dim, p, q), p), q / s);
  IterationParams out;
  out.b = big_c * std::pow(mu / c, q / s);
  out.beta = q * (q * p + (p - q) * dim) / (dim * s);
  out.gamma = q * p / (dim * s);
  out.delta = q * q / s;
  out.q = q;
  out.h0 = std::max(theta / 2.0, std::numeric_limits<double>::min());
  return out;
}

double theorem_sup_bound(double c, double mu, double theta, int dim, double p, double q, double uq_norm) {
  const IterationParams params = sup_bound_params(c, mu, theta, dim, p, q);
  return std::max(theta, degiorgi_clause(params, uq_norm));
}

LevelSetReport levelset_verify(const ScalarField& u, const Energy& energy, double mu, double theta, double q,
                               const std::vector<double>& k_grid) {
  const Domain& d = u.domain();
  const double p = energy.p();
  const double scale = mu / energy.c() * std::pow(4.0, q - 1.0);
  LevelSetReport report;
  for (double k : k_grid) {
    if (k < theta / 2.0) continue;
    LevelSetRow row;
    row.k = k;
    const Mat dk = gradient(u.truncated_above(k)).values();
    Vec cells(dk.cols());
    for (int c = 0; c < dk.cols(); ++c) cells(c) = std::pow(dk.col(c).norm(), p);
    row.lhs = integrate_cells(cells, d);
    Vec nodes = Vec::Zero(u.size());
    for (int i = 0; i < u.size(); ++i) {
      if (u[i] >= k) nodes(i) = std::pow(k, q) + std::pow(u[i] - k, q);
    }
    row.rhs = scale * integrate(nodes, d);
    row.pass = row.lhs <= kSlack * row.rhs;
    report.pass = report.pass && row.pass;
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace aniso
