#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <numbers>
#include <random>

#include "aniso/solver.hpp"
#include "test_support.hpp"

using namespace aniso;
using namespace aniso::testing;

namespace {

DomainPtr share(Domain d) { return std::make_shared<const Domain>(std::move(d)); }

// Eigen-reaction with the factor p that makes first eigenfunctions critical
// points: p int H(Dv) = int f(v) v.
Reaction eigen_reaction(double lambda, double p) {
  const Reaction r = Reaction::power(p * lambda, p - 1.0);
  return r.with_monotonicity(r.natural_monotonicity(p));
}

Reaction declared(const Reaction& r, double p) { return r.with_monotonicity(r.natural_monotonicity(p)); }

void check_perturbations(const Energy& e, const Reaction& r, const CriticalPointResult& cp) {
  std::mt19937_64 rng(7);
  const double ju = semilinearized_functional(e, r, cp.u, cp.u);
  for (int k = 0; k < 100; ++k) {
    const ScalarField v(cp.u.domain_ptr(), cp.u.values() + random_vec(rng, cp.u.size(), 1e-3 * (1 + cp.u.max_abs())));
    CHECK(ju <= semilinearized_functional(e, r, cp.u, v) + 1e-10 * (1 + std::abs(ju)));
  }
}

}  // namespace

TEST_CASE("semilinearized_solve examples") {
  const auto d = share(Domain::interval(63, 1.0));
  const Energy e = Energy::euclidean(1, 2.0, 0.5);
  CHECK(semilinearized_solve(e, *d, ScalarField::zeros(d)).v.cwiseAbs().maxCoeff() == 0.0);
  const auto one = semilinearized_solve(e, *d, ScalarField::constant(d, 1.0));
  const auto two = semilinearized_solve(e, *d, ScalarField::constant(d, 2.0));
  CHECK((two.v - 2.0 * one.v).cwiseAbs().maxCoeff() <= 1e-12);
  for (int k = 0; k < d->num_nodes(); ++k) {
    const double x = d->node_coord(k)[0];
    CHECK(one.v(k) == doctest::Approx(x * (1 - x) / 2).epsilon(1e-10));
  }
  CHECK_THROWS_AS(semilinearized_solve(e, *d, ScalarField::constant(d, NAN)), Error);
}

TEST_CASE("recover_xi") {
  std::mt19937_64 rng(1);
  const auto d = share(Domain::rectangle(5, 4, 1.0, 1.0));
  const ScalarField u(d, random_vec(rng, d->num_nodes()));
  const ScalarField g = ScalarField::zeros(d);

  const auto quad = recover_xi(Energy::euclidean(2, 2.0), u, g);
  const Mat du = gradient(u).values();
  CHECK((quad.xi - 2.0 * du).cwiseAbs().maxCoeff() == 0.0);
  CHECK(quad.epsilons.empty());
  CHECK(quad.max_defect.front() <= 1e-14 * (1 + du.cwiseAbs2().colwise().sum().maxCoeff()));

  // Smoothing-limit defect against its closed form p M^2 |M^{p-2} - (M^2 + eps^2 s^2)^{p/2-1}|.
  const Energy poly = Energy::polytope(pentagon_gauge(), 3.0);
  const auto rec = recover_xi(poly, u, g);
  REQUIRE(rec.epsilons.size() == 3);
  double s = 0.0;
  for (int c = 0; c < du.cols(); ++c) s = std::max(s, poly.gauge().eval(du.col(c)));
  for (std::size_t k = 0; k < 3; ++k) {
    const double eps = rec.epsilons[k];
    double worst = 0.0;
    for (int c = 0; c < du.cols(); ++c) {
      const double m = poly.gauge().eval(du.col(c));
      worst = std::max(worst, 3.0 * m * m * std::abs(m - std::sqrt(m * m + eps * eps * s * s)));
    }
    CHECK(rec.max_defect[k] == doctest::Approx(worst).epsilon(1e-6));
    CHECK(rec.max_defect[k] <= 3.0 * s * s * s * eps);
  }

  // Unit-scale cell strictly inside a facet cone: M(Du) = s = 1.
  const auto line = share(Domain::interval(1, 2.0));
  const Energy skew = Energy::polytope(skew_interval_gauge(), 1.5);
  const ScalarField bump(line, vec({1.0}));
  const auto unit = recover_xi(skew, bump, ScalarField::zeros(line));
  CHECK(unit.max_defect.back() <= 1e-10);

  // Du = 0 cell.
  const auto zero = recover_xi(poly, ScalarField::zeros(d), g);
  CHECK(zero.xi.cwiseAbs().maxCoeff() == 0.0);
  CHECK(zero.max_defect.back() == 0.0);
}

TEST_CASE("critical point with a constant reaction is the torsion solution") {
  const auto d = share(Domain::interval(99, 1.0));
  const Energy e = Energy::euclidean(1, 2.0, 0.5);
  const Reaction r = declared(Reaction::constant(1.0), 2.0);
  const auto cp = critical_point(e, d, r, ScalarField::constant(d, 0.7));
  CHECK(cp.iterations == 1);
  for (int k = 0; k < d->num_nodes(); ++k) {
    const double x = d->node_coord(k)[0];
    CHECK(cp.u[k] == doctest::Approx(x * (1 - x) / 2).epsilon(1e-9));
  }
  CHECK(cp.identity_defect <= 1e-8 * cp.identity_scale);
  CHECK(cp.subproblem_optimality_gap <= 1e-8);
  CHECK(cp.nonnegativity_expected);
  CHECK(cp.min_value > 0.0);
  check_perturbations(e, r, cp);
}

TEST_CASE("eigenfunction starts are fixed points of the eigen-reaction") {
  for (double p : {2.0, 3.0}) {
    const auto d = share(Domain::interval(30, 1.0));
    const Energy e = Energy::euclidean(1, p);
    EigenOptions eo;
    eo.tol = 1e-12;
    const auto eig = eigen(e, d, SignConstraint::Nonnegative, eo);
    const Reaction r = eigen_reaction(eig.lambda, p);
    const auto cp = critical_point(e, d, r, eig.v * 3.0);
    CHECK(cp.iterations <= 1);
    CHECK(cp.identity_defect <= 1e-8 * cp.identity_scale);
    CHECK((cp.u.values() - 3.0 * eig.v.values()).cwiseAbs().maxCoeff() <= 1e-6 * 3.0 * eig.v.max_abs());
    check_perturbations(e, r, cp);
  }
}

TEST_CASE("affine reaction on the unit disk exceeds mu theta / (2N)") {
  const auto d = share(Domain::disk(1.0, 1.0 / 64));
  const Energy e = Energy::euclidean(2, 2.0, 0.5);
  const Reaction r = declared(Reaction::affine(1.0, 1.0), 2.0);
  const auto cp = critical_point(e, d, r, ScalarField::zeros(d));
  CHECK(cp.u.max_abs() >= 0.25);
  CHECK(cp.identity_defect <= 1e-6 * cp.identity_scale);
  const auto sb = sup_bound_check(e, r, cp.u);
  CHECK(sb.applicable);
  CHECK(sb.pass);
  CHECK(minimum_principle_check(cp.u).pass);
}

TEST_CASE("critical points on polytope energies carry certificates") {
  const auto d = share(Domain::l_shape(9, 0.125));
  for (const Energy& e : {Energy::polytope(pentagon_gauge(), 1.5), Energy::polytope(skew_box_gauge(), 3.0)}) {
    const Reaction r = declared(Reaction::affine(0.5, 1.0), e.p());
    const auto cp = critical_point(e, d, r, ScalarField::constant(d, 0.1));
    CHECK(cp.identity_defect <= 1e-6 * cp.identity_scale);
    CHECK(cp.euler_max <= 1e-8);
    check_perturbations(e, r, cp);
  }
}

TEST_CASE("growing reaction has no fixed point") {
  const auto d = share(Domain::interval(20, 1.0));
  const Energy e = Energy::euclidean(1, 2.0);
  const double lambda = eigen(e, d, SignConstraint::Nonnegative).lambda;
  CHECK_THROWS_WITH_AS(critical_point(e, d, eigen_reaction(3.0 * lambda, 2.0), ScalarField::constant(d, 1.0)),
                       doctest::Contains("no fixed point found; reaction may violate monotonicity"), Error);
}

TEST_CASE("eigenvalue of the interval") {
  const auto d = share(Domain::interval(200, 1.0));
  const auto r = eigen(Energy::euclidean(1, 2.0), d, SignConstraint::Free);
  CHECK(std::abs(r.lambda - std::numbers::pi * std::numbers::pi) <= 0.01);
  // Discrete oracle: (2 / h^2)(1 - cos(pi h)).
  const double h = 1.0 / 201;
  CHECK(r.lambda == doctest::Approx(2.0 / (h * h) * (1 - std::cos(std::numbers::pi * h))).epsilon(1e-9));
  CHECK(lp_norm(r.v, 2.0) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(r.c_opt() == doctest::Approx(1.0 / r.lambda));
  for (std::size_t k = 1; k < r.history.size(); ++k) CHECK(r.history[k] <= r.history[k - 1]);
}

TEST_CASE("sign-constrained eigenvalues") {
  const auto d = share(Domain::l_shape(7, 0.125));
  for (const auto& [name, e] : energy_zoo_2d()) {
    CAPTURE(name);
    const auto plus = eigen(e, d, SignConstraint::Nonnegative);
    const auto minus = eigen(e, d, SignConstraint::Nonpositive);
    CHECK(plus.v.min() >= 0.0);
    CHECK(minus.v.max() <= 0.0);
    CHECK(lp_norm(plus.v, e.p()) == doctest::Approx(1.0).epsilon(1e-10));
    // Reflection identity.
    const auto reflected = eigen(Energy::reflected(e), d, SignConstraint::Nonnegative);
    CHECK(std::abs(minus.lambda - reflected.lambda) <= 1e-8 * minus.lambda);
  }
}

TEST_CASE("eigen relations") {
  // Symmetric interval with a non-even gauge.
  const auto interval = share(Domain::interval(40, 1.0));
  const auto r1 = eigen_relations_check(Energy::polytope(skew_interval_gauge(), 2.5), interval);
  CHECK_FALSE(r1.symmetry.empty());
  CHECK(r1.pass);
  REQUIRE(r1.symmetric_defect);
  CHECK(*r1.symmetric_defect <= 1e-6);

  // Even energy: all three agree.
  const auto disk = share(Domain::disk(1.0, 0.2));
  const auto r2 = eigen_relations_check(Energy::polytope(linf_gauge(), 2.0), disk);
  CHECK(r2.symmetry == "identity (H even)");
  CHECK(r2.pass);

  // Non-even gauge on the L-shape: only the min relation is asserted.
  const auto l = share(Domain::l_shape(8, 0.125));
  const auto r3 = eigen_relations_check(Energy::polytope(skew_box_gauge(), 3.0), l);
  CHECK(r3.symmetry.empty());
  CHECK(r3.min_relation_pass);
  CHECK(std::abs(r3.lambda_plus - r3.lambda_minus) > 1.0);
  CHECK(r3.lambda <= std::min(r3.lambda_plus, r3.lambda_minus) * (1 + 1e-8));
}

TEST_CASE("minimum principle") {
  for (const auto& d : {share(Domain::disk(1.0, 0.1)), share(Domain::l_shape(12, 0.1)), share(Domain::interval(50, 1.0))}) {
    const Energy e = d->dim() == 1 ? Energy::polytope(skew_interval_gauge(), 2.0) : Energy::polytope(pentagon_gauge(), 2.0);
    const auto torsion = critical_point(e, d, declared(Reaction::constant(1.0), 2.0), ScalarField::zeros(d));
    CHECK(minimum_principle_check(torsion.u).pass);
    CHECK(minimum_principle_check(eigen(e, d, SignConstraint::Nonnegative).v).pass);
  }
  const auto d = share(Domain::interval(5, 1.0));
  CHECK_FALSE(minimum_principle_check(ScalarField(d, vec({1, 1, 0, 1, 1}))).pass);
}

TEST_CASE("sup bound on 2D torsion") {
  for (const auto& d : {share(Domain::disk(1.0, 1.0 / 32)), share(Domain::rectangle(30, 20, 1.5, 1.0))}) {
    for (const Energy& e : {Energy::euclidean(2, 2.0, 0.5), Energy::polytope(skew_box_gauge(), 3.0)}) {
      const Reaction r = declared(Reaction::constant(1.0), e.p());
      const auto cp = critical_point(e, d, r, ScalarField::zeros(d));
      const auto sb = sup_bound_check(e, r, cp.u);
      CHECK(sb.applicable);
      CHECK(sb.measured <= sb.bound);
    }
  }
  const auto d1 = share(Domain::interval(10, 1.0));
  CHECK_FALSE(sup_bound_check(Energy::euclidean(1, 2.0), Reaction::constant(1.0), ScalarField::constant(d1, 1.0))
                  .applicable);
}

TEST_CASE("uniqueness experiments") {
  const auto d1 = share(Domain::interval(30, 1.0));
  const auto d2 = share(Domain::l_shape(8, 0.125));
  UniquenessOptions opt;
  opt.starts = 10;
  for (const auto& [d, e] : std::vector<std::pair<DomainPtr, Energy>>{
           {d1, Energy::euclidean(1, 2.0)},
           {d1, Energy::polytope(skew_interval_gauge(), 3.0)},
           {d2, Energy::polytope(pentagon_gauge(), 1.5)},
           {d2, Energy::euclidean(2, 3.0)}}) {
    const auto rep = uniqueness_experiment(e, d, declared(Reaction::constant(1.0), e.p()), opt);
    CHECK(rep.hypothesis_met);
    CHECK(rep.pass);
    REQUIRE(rep.part2_distance);
    CHECK(*rep.part2_distance <= 1e-6);
    REQUIRE(rep.picone_cross);
  }

  opt.tol = 1e-5;
  for (const auto& d : {d1, d2}) {
    const Energy e = Energy::euclidean(d->dim(), 2.0);
    EigenOptions eo;
    eo.tol = 1e-12;
    const double lambda = eigen(e, d, SignConstraint::Nonnegative, eo).lambda;
    const auto rep = uniqueness_experiment(e, d, eigen_reaction(lambda, 2.0), opt);
    CHECK(rep.pass);
    REQUIRE(rep.part3);
    CHECK(*rep.part3);
    REQUIRE(rep.part4);
    CHECK(*rep.part4);
    CHECK(rep.proportionality_constants.back() > 100.0);
    CHECK(*rep.picone_cross >= -1e-8);
  }

  const auto skipped = uniqueness_experiment(Energy::euclidean(1, 2.0), d1, Reaction::power(1.0, 3.0), opt);
  CHECK_FALSE(skipped.hypothesis_met);
  CHECK(skipped.classification.find("hypothesis not met") != std::string::npos);
  CHECK(skipped.runs.empty());
}

TEST_CASE("multi-start results do not depend on the thread count") {
  const auto d = share(Domain::l_shape(7, 0.125));
  const Energy e = Energy::polytope(pentagon_gauge(), 1.5);
  setenv("ANISO_THREADS", "1", 1);
  const auto a = eigen(e, d, SignConstraint::Free);
  setenv("ANISO_THREADS", "4", 1);
  const auto b = eigen(e, d, SignConstraint::Free);
  unsetenv("ANISO_THREADS");
  CHECK(a.lambda == b.lambda);
  CHECK(a.v.values() == b.v.values());
  CHECK(a.best_start == b.best_start);
}
