#include "aniso/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

#include "aniso/bounds.hpp"
#include "aniso/picone.hpp"

namespace aniso {

namespace {

// Runs fn(0..count-1) on up to worker_threads() threads. Results are
// written by index, so the outcome does not depend on scheduling; the
// lowest-index exception is rethrown.
template <class T>
std::vector<T> parallel_map(int count, const std::function<T(int)>& fn) {
  std::vector<std::optional<T>> slots(count);
  std::vector<std::exception_ptr> errors(count);
  auto run = [&](int i) {
    try {
      slots[i].emplace(fn(i));
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const int threads = std::min(worker_threads(), count);
  if (threads <= 1) {
    for (int i = 0; i < count; ++i) run(i);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (int i = t; i < count; i += threads) run(i);
      });
    }
    for (auto& th : pool) th.join();
  }
  std::vector<T> out;
  for (int i = 0; i < count; ++i) {
    if (errors[i]) std::rethrow_exception(errors[i]);
    out.push_back(std::move(*slots[i]));
  }
  return out;
}

double lp_norm_vec(const Vec& v, double p, double w) { return std::pow(w * v.array().abs().pow(p).sum(), 1.0 / p); }

Vec signed_power(const Vec& v, double e) {
  Vec out(v.size());
  for (int k = 0; k < v.size(); ++k) out(k) = v(k) == 0.0 ? 0.0 : std::copysign(std::pow(std::abs(v(k)), e), v(k));
  return out;
}

void check_domain(const ScalarField& u, const DomainPtr& domain, const char* what) {
  if (u.domain_ptr() != domain && u.size() != domain->num_nodes()) {
    throw Error(std::string(what) + ": field does not live on the domain");
  }
}

}  // namespace

int worker_threads() {
  if (const char* env = std::getenv("ANISO_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return std::min(n, 256);
  }
  return 1;
}

SubproblemResult semilinearized_solve(const Energy& energy, const Domain& domain, const ScalarField& g, double tol,
                                      const Vec* warm_start) {
  if (!g.values().allFinite()) throw Error("semilinearized_solve: g must be finite");
  SubproblemOptions opt;
  opt.gap_tol = tol;
  return minimize_semilinear(energy, domain, g.values(), opt, warm_start);
}

XiRecovery recover_xi(const Energy& energy, const ScalarField& u, const ScalarField& g) {
  const Domain& d = u.domain();
  const Mat du = gradient(u).values();
  const double p = energy.p();
  XiRecovery out;
  out.xi = Mat::Zero(du.rows(), du.cols());
  auto defects = [&](const Mat& xi) {
    double worst = 0.0, sum = 0.0;
    for (int c = 0; c < du.cols(); ++c) {
      const double e = std::abs(euler_defect(energy, du.col(c), xi.col(c)));
      worst = std::max(worst, e);
      sum += e;
    }
    out.max_defect.push_back(worst);
    out.mean_defect.push_back(du.cols() > 0 ? sum / du.cols() : 0.0);
  };

  const Energy& base = energy.canonical();
  if (energy.differentiable()) {
    Vec grad;
    Mat hess;
    for (int c = 0; c < du.cols(); ++c) {
      base.derivatives(du.col(c), grad, hess);
      out.xi.col(c) = grad;
    }
    defects(out.xi);
  } else {
    const Gauge& gauge = base.gauge();
    double s = 0.0;
    for (int c = 0; c < du.cols(); ++c) s = std::max(s, gauge.eval(du.col(c)));
    if (s <= 0.0) s = 1.0;
    for (double eps : {1e-3, 1e-4, 1e-5}) {
      Mat xi = Mat::Zero(du.rows(), du.cols());
      for (int c = 0; c < du.cols(); ++c) {
        const Vec z = du.col(c);
        const double m = gauge.eval(z);
        if (!(m > 0.0)) continue;
        Vec normal = Vec::Zero(z.size());
        const auto active = gauge.active_facets(z);
        for (int i : active) normal += gauge.facets()[i];
        normal /= static_cast<double>(active.size());
        xi.col(c) = p * std::pow(m * m + eps * eps * s * s, p / 2.0 - 1.0) * m * normal;
      }
      out.epsilons.push_back(eps);
      defects(xi);
      out.xi = xi;
    }
  }
  out.balance_residual = (gradient_transpose(d, out.xi) - g.values()).cwiseAbs().maxCoeff();
  return out;
}

double energy_functional(const Energy& energy, const Reaction& reaction, const ScalarField& u) {
  return energy_integral(energy, u.domain(), u.values()) - integrate(reaction.primitive(u.values()), u.domain());
}

double semilinearized_functional(const Energy& energy, const Reaction& reaction, const ScalarField& u,
                                 const ScalarField& v) {
  return semilinear_objective(energy, u.domain(), reaction.eval(u.values()), v.values());
}

CriticalPointResult critical_point(const Energy& energy, const DomainPtr& domain, const Reaction& reaction,
                                   const ScalarField& u_init, const CriticalPointOptions& options) {
  check_domain(u_init, domain, "critical_point");
  if (energy.dim() != domain->dim()) throw Error("critical_point: energy and domain dimensions differ");
  reaction.check_nodes(domain->num_nodes());
  if (!u_init.values().allFinite()) throw Error("critical_point: initial field must be finite");
  const double omega = options.omega.value_or(reaction.t_independent() ? 1.0 : 0.7);
  if (!(omega > 0.0 && omega <= 1.0)) throw Error("critical_point: damping must lie in (0, 1]");

  const Domain& d = *domain;
  SubproblemOptions sub_opt;
  sub_opt.gap_tol = options.gap_tol;
  const double blowup = 1e12 * (1.0 + u_init.max_abs());

  Vec u = u_init.values();
  int updates = 0;
  for (;;) {
    const Vec g = reaction.eval(u);
    SubproblemResult sub = minimize_semilinear(energy, d, g, sub_opt, &u);
    const double scale = 1.0 + u.cwiseAbs().maxCoeff();
    const double residual = (sub.v - u).cwiseAbs().maxCoeff() / scale;
    if (residual <= options.tol_fp) {
      CriticalPointResult r{.u = ScalarField(domain, u)};
      r.iterations = updates;
      r.fixed_point_residual = residual;
      r.subproblem_optimality_gap = std::max(0.0, semilinear_objective(energy, d, g, u) - sub.objective) + sub.gap;
      const double ph = energy.p() * energy_integral(energy, d, u);
      r.identity_defect = std::abs(ph - integrate(Vec(g.cwiseProduct(u)), d));
      r.identity_scale = 1.0 + ph;
      const XiRecovery xi = recover_xi(energy, r.u, ScalarField(domain, g));
      r.euler_mean = xi.mean_defect.back();
      r.euler_max = xi.max_defect.back();
      r.J = energy_functional(energy, reaction, r.u);
      r.balance_residual = sub.balance_residual;
      r.nonnegativity_expected = reaction.nonnegative_below_zero(d.num_nodes());
      r.min_value = u.minCoeff();
      return r;
    }
    if (updates >= options.max_outer || !sub.v.allFinite() || sub.v.cwiseAbs().maxCoeff() > blowup) {
      std::ostringstream msg;
      msg << "no fixed point found; reaction may violate monotonicity (after " << updates
          << " updates, residual " << residual << ")";
      throw Error(msg.str());
    }
    u = (1.0 - omega) * u + omega * sub.v;
    ++updates;
  }
}

PerturbationTest perturbation_test(const Energy& energy, const Reaction& reaction, const ScalarField& u, int count,
                                   unsigned long long seed, double tol) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1e-3 * (1.0 + u.max_abs()));
  const Vec g = reaction.eval(u.values());
  const double ju = semilinear_objective(energy, u.domain(), g, u.values());
  PerturbationTest out;
  out.count = count;
  out.tol = tol * (1.0 + std::abs(ju));
  out.worst_excess = -std::numeric_limits<double>::infinity();
  Vec v(u.size());
  for (int k = 0; k < count; ++k) {
    for (int i = 0; i < v.size(); ++i) v(i) = u[i] + normal(rng);
    out.worst_excess = std::max(out.worst_excess, ju - semilinear_objective(energy, u.domain(), g, v));
  }
  out.pass = out.worst_excess <= out.tol;
  return out;
}

double rayleigh_quotient(const Energy& energy, const ScalarField& v) {
  const double denom = integrate(Vec(v.values().array().abs().pow(energy.p())), v.domain());
  if (!(denom > 0.0)) throw Error("rayleigh_quotient: zero field");
  return energy_integral(energy, v.domain(), v.values()) / denom;
}

EigenResult eigen(const Energy& energy, const DomainPtr& domain, SignConstraint constraint,
                  const EigenOptions& options) {
  const Domain& d = *domain;
  const double p = energy.p();
  if (!(p > 1.0)) throw Error("eigen: needs p > 1");
  if (!(energy.c() > 0.0)) throw Error("eigen: needs c > 0");
  if (energy.dim() != d.dim()) throw Error("eigen: energy and domain dimensions differ");
  if (options.starts < 1) throw Error("eigen: needs at least one start");
  const int n = d.num_nodes();
  const double w = d.weight();
  const double s = constraint == SignConstraint::Nonpositive ? -1.0 : 1.0;

  struct Run {
    double lambda;
    Vec v;
    std::vector<double> history;
  };

  auto start_field = [&](int k) {
    Vec v(n);
    if (k == 0) return Vec(Vec::Constant(n, s));
    if (k == 1 && constraint == SignConstraint::Free) return Vec(Vec::Constant(n, -1.0));
    std::mt19937_64 rng(options.seed + static_cast<unsigned long long>(k));
    if (constraint == SignConstraint::Free) {
      std::normal_distribution<double> normal;
      for (int i = 0; i < n; ++i) v(i) = normal(rng);
    } else {
      std::uniform_real_distribution<double> unif(0.1, 1.0);
      for (int i = 0; i < n; ++i) v(i) = s * unif(rng);
    }
    return v;
  };

  SubproblemOptions sub_opt;
  sub_opt.sign = constraint;
  auto run = [&](int k) -> Run {
    Vec v = start_field(k);
    v /= lp_norm_vec(v, p, w);
    double lambda = rayleigh_quotient(energy, ScalarField(domain, v));
    Run out{lambda, v, {lambda}};
    for (int it = 0; it < options.max_iter; ++it) {
      const Vec warm = v * std::pow(lambda, -1.0 / (p - 1.0));
      const SubproblemResult sub = minimize_semilinear(energy, d, signed_power(v, p - 1.0), sub_opt, &warm);
      const double norm = lp_norm_vec(sub.v, p, w);
      if (!(norm > 0.0)) break;
      const Vec next = sub.v / norm;
      const double value = rayleigh_quotient(energy, ScalarField(domain, next));
      if (value > lambda * (1.0 + 1e-13)) break;
      const double change = lambda - value;
      const double step = (next - v).cwiseAbs().maxCoeff();
      v = next;
      lambda = std::min(lambda, value);
      out.history.push_back(lambda);
      if (change <= 1e-3 * options.tol * lambda && step <= std::sqrt(options.tol)) break;
    }
    out.lambda = lambda;
    out.v = v;
    return out;
  };

  const auto runs = parallel_map<Run>(options.starts, run);
  int best = 0;
  for (int k = 1; k < options.starts; ++k) {
    if (runs[k].lambda < runs[best].lambda) best = k;
  }
  if (runs[best].history.size() < 2) throw Error("eigen: no start decreased the Rayleigh quotient");
  return EigenResult{runs[best].lambda, ScalarField(domain, runs[best].v), constraint, runs[best].history, best};
}

EigenRelations eigen_relations_check(const Energy& energy, const DomainPtr& domain, double tol_min, double tol_sym,
                                     const EigenOptions& options) {
  EigenRelations r;
  r.lambda = eigen(energy, domain, SignConstraint::Free, options).lambda;
  r.lambda_plus = eigen(energy, domain, SignConstraint::Nonnegative, options).lambda;
  r.lambda_minus = eigen(energy, domain, SignConstraint::Nonpositive, options).lambda;
  const double m = std::min(r.lambda_plus, r.lambda_minus);
  r.min_relation_defect = std::abs(r.lambda - m) / m;
  r.min_relation_pass = r.min_relation_defect <= tol_min;
  const int dim = energy.dim();
  if (symmetry_check(energy, -Mat::Identity(dim, dim))) {
    r.symmetry = "identity (H even)";
  } else {
    for (const auto& sym : domain->symmetries()) {
      if (symmetry_check(energy, -sym.transform)) {
        r.symmetry = sym.name;
        break;
      }
    }
  }
  r.pass = r.min_relation_pass;
  if (!r.symmetry.empty()) {
    r.symmetric_defect = std::abs(r.lambda_plus - r.lambda_minus) / m;
    r.pass = r.pass && *r.symmetric_defect <= tol_sym;
  }
  return r;
}

MinimumPrinciple minimum_principle_check(const ScalarField& u) {
  const Domain& d = u.domain();
  const auto layer = d.boundary_layer(3);
  MinimumPrinciple r;
  r.min_interior = u.min();
  r.min_away = std::numeric_limits<double>::infinity();
  for (int k = 0; k < u.size(); ++k) {
    if (!layer[k]) r.min_away = std::min(r.min_away, u[k]);
  }
  r.threshold = 1e-6 * u.max_abs();
  r.pass = r.min_interior > 0.0 && (std::isinf(r.min_away) || r.min_away > r.threshold);
  return r;
}

SupBoundCheck sup_bound_check(const Energy& energy, const Reaction& reaction, const ScalarField& u) {
  SupBoundCheck r;
  r.measured = u.max_abs();
  const Envelope& e = reaction.envelope();
  const int dim = u.domain().dim();
  r.applicable = dim >= 2 && e.q < critical_exponent(dim, energy.p());
  if (!r.applicable) {
    r.pass = true;
    return r;
  }
  const double uq = integrate(Vec(u.values().array().abs().pow(e.q)), u.domain());
  r.bound = theorem_sup_bound(energy.c(), e.mu, e.theta, dim, energy.p(), e.q, uq);
  r.pass = r.measured <= r.bound;
  return r;
}

double picone_cross_check(const Reaction& reaction, double p, const ScalarField& u, const ScalarField& v) {
  if (!(u.min() > 0.0) || !(v.min() > 0.0)) throw Error("picone_cross_check: needs positive fields");
  double total = 0.0;
  for (int k = 0; k < u.size(); ++k) {
    const double a = u[k], b = v[k];
    total += (reaction.eval(k, a) / std::pow(a, p - 1.0) - reaction.eval(k, b) / std::pow(b, p - 1.0)) *
             (std::pow(a, p) - std::pow(b, p));
  }
  return total * u.domain().weight();
}

UniquenessReport uniqueness_experiment(const Energy& energy, const DomainPtr& domain, const Reaction& reaction,
                                       const UniquenessOptions& options) {
  if (options.starts < 2) throw Error("uniqueness_experiment: needs at least two starts");
  const Domain& d = *domain;
  const int n = d.num_nodes();
  const double p = energy.p();
  UniquenessReport rep;
  const Monotonicity cls = reaction.monotonicity();
  if (cls == Monotonicity::Other) {
    rep.classification = "hypothesis not met: f(t)/t^{p-1} not declared monotone";
    rep.pass = true;
    return rep;
  }
  rep.monotonicity_witness = reaction.monotonicity_witness(p, n);
  if (rep.monotonicity_witness) {
    const auto [t1, t2] = *rep.monotonicity_witness;
    rep.classification = "declared monotonicity class fails the sampled check";
    std::ostringstream msg;
    msg.precision(17);
    msg << "f(t)/t^{p-1} is not " << to_string(cls) << " between t = " << t1 << " and t = " << t2;
    rep.failures.push_back(msg.str());
    return rep;
  }
  rep.hypothesis_met = true;

  rep.runs = parallel_map<CriticalPointResult>(options.starts, [&](int i) {
    std::mt19937_64 rng(options.seed + static_cast<unsigned long long>(i));
    std::uniform_real_distribution<double> unif(0.1, 1.0);
    const double amp = std::pow(options.amplitude_span, double(i) / (options.starts - 1));
    Vec x(n);
    for (int k = 0; k < n; ++k) x(k) = amp * unif(rng);
    return critical_point(energy, domain, reaction, ScalarField(domain, x), options.critical);
  });

  // Part 1: sampled minimality among nonnegative fields.
  {
    std::mt19937_64 rng(options.seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (const auto& run : rep.runs) {
      const double ju = energy_functional(energy, reaction, run.u);
      const double amp = 2.0 * run.u.max_abs();
      for (int j = 0; j < options.comparison_fields; ++j) {
        Vec x(n);
        if (j % 2 == 0) {
          for (int k = 0; k < n; ++k) x(k) = amp * unif(rng);
        } else {
          const double t = 2.0 * unif(rng);
          for (int k = 0; k < n; ++k) x(k) = std::max(0.0, t * run.u[k] + 0.05 * amp * (unif(rng) - 0.5));
        }
        const double jv = energy_functional(energy, reaction, ScalarField(domain, x));
        const double excess = (ju - jv) / (1.0 + std::abs(ju) + std::abs(jv));
        rep.part1_worst = std::max(rep.part1_worst, excess);
      }
    }
    rep.part1 = rep.part1_worst <= options.tol;
    if (!rep.part1) rep.failures.push_back("part 1: a comparison field has lower energy");
  }

  double max_norm = 0.0;
  for (const auto& run : rep.runs) max_norm = std::max(max_norm, run.u.max_abs());

  if (cls == Monotonicity::StrictlyDecreasing) {
    rep.classification = "strictly decreasing: unique positive critical point";
    double dist = 0.0;
    for (std::size_t i = 0; i < rep.runs.size(); ++i) {
      for (std::size_t j = i + 1; j < rep.runs.size(); ++j) {
        dist = std::max(dist, (rep.runs[i].u.values() - rep.runs[j].u.values()).cwiseAbs().maxCoeff());
      }
    }
    rep.part2_distance = max_norm > 0.0 ? dist / max_norm : dist;
    if (*rep.part2_distance > options.tol) rep.failures.push_back("part 2: runs disagree");
  } else if (!energy.strictly_convex()) {
    rep.classification = "non-increasing with a non-strictly convex energy: proportionality not asserted";
  } else {
    rep.classification = "non-increasing: solutions are proportional";
    bool all = true;
    for (std::size_t i = 0; i < rep.runs.size() && all; ++i) {
      for (std::size_t j = i + 1; j < rep.runs.size(); ++j) {
        if (!proportionality_detect(rep.runs[i].u, rep.runs[j].u, options.tol)) {
          all = false;
          rep.failures.push_back("part 3: runs " + std::to_string(i) + " and " + std::to_string(j) +
                                 " are not proportional");
          break;
        }
      }
    }
    rep.part3 = all;
    bool nontrivial = false;
    for (const auto& run : rep.runs) {
      const auto k = proportionality_detect(rep.runs.front().u, run.u, options.tol);
      const double kv = k.value_or(std::numeric_limits<double>::quiet_NaN());
      rep.proportionality_constants.push_back(kv);
      if (k && std::abs(kv - 1.0) > 1e3 * options.tol) nontrivial = true;
    }
    if (all && nontrivial && reaction.x_independent()) {
      EigenOptions eo;
      eo.tol = std::min(1e-8, options.tol * 1e-3);
      rep.lambda_plus = eigen(energy, domain, SignConstraint::Nonnegative, eo).lambda;
      bool ok = true;
      for (const auto& run : rep.runs) {
        const double r = rayleigh_quotient(energy, run.u);
        rep.rayleigh.push_back(r);
        if (std::abs(r - *rep.lambda_plus) > options.tol * *rep.lambda_plus) ok = false;
      }
      rep.part4 = ok;
      if (!ok) rep.failures.push_back("part 4: a Rayleigh quotient differs from lambda_1^+");
    }
  }

  if (rep.runs.size() >= 2 && rep.runs[0].u.min() > 0.0 && rep.runs[1].u.min() > 0.0) {
    rep.picone_cross = picone_cross_check(reaction, p, rep.runs[0].u, rep.runs[1].u);
    const double scale = 1.0 + std::pow(max_norm, p) * d.measure() *
                                    (1.0 + reaction.envelope().mu * std::pow(max_norm + 1.0, reaction.envelope().q));
    if (*rep.picone_cross < -options.tol * scale) rep.failures.push_back("Picone cross-check negative");
  }
  rep.pass = rep.failures.empty();
  return rep;
}

}  // namespace aniso
