#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "aniso/picone.hpp"
#include "test_support.hpp"

using namespace aniso;
using namespace aniso::testing;

namespace {

DomainPtr share(Domain d) { return std::make_shared<const Domain>(std::move(d)); }

ScalarField positive_field(std::mt19937_64& rng, const DomainPtr& d) {
  std::uniform_real_distribution<double> unif(0.05, 2.0);
  Vec x(d->num_nodes());
  for (int k = 0; k < x.size(); ++k) x(k) = unif(rng);
  return ScalarField(d, x);
}

}  // namespace

TEST_CASE("hand-expanded quadratic cell") {
  // h = 1; cell 1 runs from node 0 to node 1: Du = 1, Dv = 3, u = v = 1.
  const auto d = share(Domain::interval(2, 3.0));
  const ScalarField u(d, vec({1, 2}));
  const ScalarField v(d, vec({1, 4}));
  const Energy e = Energy::euclidean(1, 2.0);
  const auto r = picone_residual(e, u, v, subgradient_selection(e, u));
  CHECK(r.chain(1) == doctest::Approx(4.0).epsilon(1e-14));
}

TEST_CASE("equality cases") {
  std::mt19937_64 rng(1);
  const auto d = share(Domain::rectangle(6, 5, 1.0, 1.0));
  for (const auto& [name, e] : energy_zoo_2d()) {
    CAPTURE(name);
    const ScalarField u = positive_field(rng, d);
    const Mat xi = subgradient_selection(e, u);
    for (double k : {1.0, 3.0}) {
      const auto r = picone_residual(e, u, u * k, xi);
      const Vec hv = [&] {
        const Mat dv = gradient(u * k).values();
        Vec out(dv.cols());
        for (int c = 0; c < dv.cols(); ++c) out(c) = e.eval(dv.col(c));
        return out;
      }();
      CHECK((r.chain.array().abs() <= 1e-12 * (1.0 + hv.array())).all());
      CHECK(r.equality_cells_fraction == 1.0);
    }
  }
}

TEST_CASE("chain-rule residual is nonnegative on random pairs") {
  std::mt19937_64 rng(2);
  std::vector<DomainPtr> domains = {share(Domain::interval(9, 1.0)), share(Domain::rectangle(5, 4, 1.0, 1.0)),
                                    share(Domain::l_shape(6, 0.2))};
  double worst = 1e300;
  double worst_discrete = 1e300;
  for (int trial = 0; trial < 1000; ++trial) {
    const DomainPtr& d = domains[trial % domains.size()];
    const auto zoo = d->dim() == 1 ? energy_zoo_1d() : energy_zoo_2d();
    const Energy& e = zoo[trial % zoo.size()].energy;
    const ScalarField u = positive_field(rng, d);
    const ScalarField v = positive_field(rng, d);
    const auto r = picone_residual(e, u, v, subgradient_selection(e, u));
    worst = std::min(worst, r.min_chain);
    worst_discrete = std::min(worst_discrete, r.min_discrete);
  }
  CHECK(worst >= -1e-10);
  // The forward-difference route breaks the Leibniz rule; it is only
  // reported. Random rough fields make it visibly negative.
  MESSAGE("worst discrete-route residual: " << worst_discrete);
}

TEST_CASE("epsilon shifts converge monotonically") {
  std::mt19937_64 rng(3);
  const auto d = share(Domain::rectangle(6, 6, 1.0, 1.0));
  for (const auto& [name, e] : energy_zoo_2d()) {
    CAPTURE(name);
    const ScalarField u = positive_field(rng, d);
    const ScalarField v = positive_field(rng, d);
    std::vector<Vec> res;
    for (double eps : {1e-4, 1e-6, 1e-8}) {
      const ScalarField shifted = u + ScalarField::constant(d, eps);
      res.push_back(picone_residual(e, shifted, v, subgradient_selection(e, shifted)).chain);
    }
    const Vec d1 = res[0] - res[1];
    const Vec d2 = res[1] - res[2];
    const Mat dv = gradient(v).values();
    for (int c = 0; c < d1.size(); ++c) {
      // The residual is a difference of two terms of this size.
      const double hv = e.eval(dv.col(c));
      const double roundoff = 1e-14 * (1.0 + hv + std::abs(hv - res[2](c)));
      CHECK(std::abs(d2(c)) <= std::abs(d1(c)) + roundoff);
      // Same direction unless both steps are already at round-off.
      if (std::abs(d1(c)) > 10 * roundoff && std::abs(d2(c)) > 10 * roundoff) CHECK(d1(c) * d2(c) > 0.0);
    }
  }
}

TEST_CASE("picone input validation") {
  const auto d = share(Domain::interval(4, 1.0));
  const Energy e = Energy::euclidean(1, 2.0);
  const ScalarField u(d, vec({1, 0, 1, 1}));
  const ScalarField ok(d, vec({1, 2, 1, 1}));
  CHECK_THROWS_WITH_AS(picone_residual(e, u, ok, subgradient_selection(e, ok)), "Picone requires inf u > 0", Error);
  Mat bad = subgradient_selection(e, ok);
  bad(0, 2) += 1.0;
  CHECK_THROWS_AS(picone_residual(e, ok, ok, bad), Error);
  const ScalarField tiny(d, vec({1, 1e-13, 1, 1}));
  CHECK_THROWS_AS(picone_residual(e, tiny, ok, subgradient_selection(e, tiny)), Error);
}

TEST_CASE("proportionality_detect") {
  std::mt19937_64 rng(4);
  const auto d = share(Domain::disk(1.0, 0.2));
  const ScalarField u = positive_field(rng, d);
  const double tol = 1e-6;
  REQUIRE(proportionality_detect(u, u * 2.0, tol));
  CHECK(*proportionality_detect(u, u * 2.0, tol) == doctest::Approx(2.0).epsilon(1e-15));

  Vec wiggle(d->num_nodes());
  for (int k = 0; k < wiggle.size(); ++k) wiggle(k) = (k % 2 ? 1.0 : -1.0);
  wiggle *= 10 * tol * u.values().norm() / wiggle.norm();
  CHECK_FALSE(proportionality_detect(u, ScalarField(d, u.values() + wiggle), tol));

  std::normal_distribution<double> normal;
  Vec noise(d->num_nodes());
  for (int k = 0; k < noise.size(); ++k) noise(k) = normal(rng);
  const double k = 7.5;
  noise *= (tol / 10) * k * u.values().norm() / noise.norm();
  const auto found = proportionality_detect(u, ScalarField(d, k * u.values() + noise), tol);
  REQUIRE(found);
  CHECK(std::abs(*found - k) <= tol * k);
  CHECK_FALSE(proportionality_detect(u, u * -1.0, tol));
}

TEST_CASE("equality propagates to proportionality") {
  std::mt19937_64 rng(5);
  const auto d = share(Domain::rectangle(5, 5, 1.0, 1.0));
  for (const auto& [name, e] : energy_zoo_2d()) {
    if (!e.strictly_convex()) continue;
    CAPTURE(name);
    const ScalarField u = positive_field(rng, d);
    const ScalarField v = u * 0.4;
    const auto r = picone_residual(e, u, v, subgradient_selection(e, u));
    REQUIRE(r.chain.cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(proportionality_detect(u, v, 1e-8));
  }
}
