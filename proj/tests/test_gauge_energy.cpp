#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "aniso/gauge_energy.hpp"
#include "test_support.hpp"

using namespace aniso;
using namespace aniso::testing;

namespace {

// One-sided directional derivative by forward differences; independent of
// subdiff().
double directional_derivative(const Energy& h, const Vec& z, const Vec& w) {
  const double t = 1e-7;
  return (h.eval(z + t * w) - h.eval(z)) / t;
}

double support(const SubgradientSet& s, const Vec& w) {
  double best = -1e300;
  for (const auto& g : s.generators) best = std::max(best, g.dot(w));
  return best;
}

Mat rotation(double angle) {
  Mat t(2, 2);
  t << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  return t;
}

}  // namespace

TEST_CASE("gauge_eval") {
  const Gauge linf = linf_gauge();
  CHECK(linf.eval(vec({2, 1})) == 2.0);
  CHECK(linf.eval(vec({0, 0})) == 0.0);
  CHECK(pentagon_gauge().eval(vec({0, 0})) == 0.0);

  const Gauge segment({vec({1, 0}), vec({-0.5, 0}), vec({0, 1}), vec({0, -1})});
  CHECK(segment.eval(vec({-4, 0})) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("gauge rejects normals that do not positively span") {
  CHECK_THROWS_AS(Gauge({vec({1, 0}), vec({0, 1})}), Error);
  CHECK_THROWS_AS(Gauge({vec({1, 0}), vec({-1, 0})}), Error);
  CHECK_THROWS_AS(Gauge({vec({1})}), Error);
  CHECK_NOTHROW(Gauge({vec({1, 1}), vec({-1, 1}), vec({0, -1})}));
}

TEST_CASE("gauge sphere extrema") {
  const Gauge linf = linf_gauge();
  CHECK(linf.max_on_sphere() == doctest::Approx(1.0));
  CHECK(linf.min_on_sphere() == doctest::Approx(1.0 / std::sqrt(2.0)));

  // Brute-force the extrema on a fine circle.
  for (const Gauge& g : {pentagon_gauge(), skew_box_gauge()}) {
    double lo = 1e300, hi = 0;
    for (int k = 0; k < 200000; ++k) {
      const double t = 2 * std::numbers::pi * k / 200000;
      const double m = g.eval(vec({std::cos(t), std::sin(t)}));
      lo = std::min(lo, m);
      hi = std::max(hi, m);
    }
    // The minimum sits at a kink (vertex direction), so sampling error is
    // first order in the angular step.
    CHECK(g.min_on_sphere() == doctest::Approx(lo).epsilon(1e-4));
    CHECK(g.min_on_sphere() <= lo);
    CHECK(g.max_on_sphere() == doctest::Approx(hi).epsilon(1e-8));
  }
}

TEST_CASE("energy_eval") {
  CHECK(Energy::euclidean(3, 3.0).eval(vec({0, 2, 0})) == doctest::Approx(8.0));
  CHECK(Energy::orthant_quadratic({2, 1, 2, 1}).eval(vec({1, -1})) == 3.0);
  CHECK(Energy::polytope(linf_gauge(), 2.0).eval(vec({2, 1})) == 4.0);
  CHECK(Energy::euclidean(2, 2.0, 0.5).eval(vec({3, 4})) == doctest::Approx(12.5));
}

TEST_CASE("subdiff examples") {
  const Energy h = Energy::polytope(linf_gauge(), 2.0);

  SUBCASE("smooth point") {
    const Vec z = vec({2, 1});
    const auto s = h.subdiff(z);
    REQUIRE(s.generators.size() == 1);
    CHECK((s.generators[0] - vec({4, 0})).norm() < 1e-14);
    for (const auto& w : sample_directions(2)) {
      CHECK(support(s, w) == doctest::Approx(directional_derivative(h, z, w)).epsilon(1e-5));
    }
  }
  SUBCASE("ridge") {
    const Vec z = vec({2, 2});
    const auto s = h.subdiff(z);
    REQUIRE(s.generators.size() == 2);
    CHECK((s.generators[0] - vec({4, 0})).norm() < 1e-14);
    CHECK((s.generators[1] - vec({0, 4})).norm() < 1e-14);
    // Directional derivative of a max is the support function of its
    // subdifferential.
    for (const auto& w : sample_directions(2)) {
      CHECK(support(s, w) == doctest::Approx(directional_derivative(h, z, w)).epsilon(1e-5));
    }
  }
  SUBCASE("origin") {
    for (const auto& [name, e] : energy_zoo_2d()) {
      const auto s = e.subdiff(Vec::Zero(2));
      REQUIRE(s.generators.size() == 1);
      CHECK(s.generators[0].isZero(0.0));
    }
  }
  SUBCASE("p = 1 at the origin is unsupported") {
    const Energy one = Energy::polytope(linf_gauge(), 1.0);
    CHECK_THROWS_WITH_AS(one.subdiff(Vec::Zero(2)), "subdifferential is the full polar ball; unsupported", Error);
  }
}

TEST_CASE("subdiff matches directional derivatives for every kind") {
  std::mt19937_64 rng(11);
  for (const auto& [name, e] : energy_zoo_2d()) {
    CAPTURE(name);
    for (int trial = 0; trial < 50; ++trial) {
      const Vec z = random_vec(rng, 2);
      const auto s = e.subdiff(z);
      for (int k = 0; k < 8; ++k) {
        const Vec w = random_vec(rng, 2);
        const double fd = directional_derivative(e, z, w);
        CHECK(support(s, w) == doctest::Approx(fd).epsilon(1e-4).scale(1.0));
      }
    }
  }
}

TEST_CASE("euler_defect") {
  const Energy linf = Energy::polytope(linf_gauge(), 2.0);
  CHECK(euler_defect(linf, vec({2, 1}), vec({4, 0})) == 0.0);
  // (2, 2) is the midpoint of the ridge subdifferential; every subgradient
  // of a p-homogeneous convex function attains the Euler identity.
  CHECK(euler_defect(linf, vec({2, 2}), vec({2, 2})) == 0.0);
  // A vector that is not a subgradient at z shows the strict inequality.
  CHECK(euler_defect(linf, vec({2, 1}), vec({2, 2})) == doctest::Approx(2.0));
  const Energy euc = Energy::euclidean(2, 2.0);
  const Vec z = vec({0.3, -1.7});
  CHECK(std::abs(euler_defect(euc, z, 2 * z)) < 1e-15);
}

TEST_CASE("symmetry_check") {
  const Energy euc = Energy::euclidean(2, 2.0);
  CHECK(symmetry_check(euc, rotation(0.7)));
  CHECK(symmetry_check(euc, rotation(2.1)));

  const Energy oq = Energy::orthant_quadratic({2, 1, 2, 1});
  CHECK_FALSE(symmetry_check(oq, -Mat::Identity(2, 2)));
  Mat swap(2, 2);
  swap << 0, 1, 1, 0;
  CHECK(symmetry_check(oq, swap));

  const Energy linf = Energy::polytope(linf_gauge(), 2.0);
  CHECK(symmetry_check(linf, rotation(std::numbers::pi / 2)));
  CHECK_FALSE(symmetry_check(linf, rotation(0.3)));
  CHECK_FALSE(symmetry_check(Energy::polytope(skew_box_gauge(), 2.0), -Mat::Identity(2, 2)));

  Mat bad(2, 2);
  bad << 1, 0.1, 0, 1;
  CHECK_THROWS_AS(symmetry_check(euc, bad), Error);
}

TEST_CASE("growth constants") {
  const Energy oq = Energy::orthant_quadratic({2, 1, 3, 1.5});
  CHECK(oq.c() == 1.0);
  CHECK(oq.d() == 3.0);
  const Energy linf = Energy::polytope(linf_gauge(), 2.0);
  CHECK(linf.c() == doctest::Approx(0.5));
  CHECK(linf.d() == doctest::Approx(1.0));
  CHECK(Energy::polytope(skew_interval_gauge(), 2.0).c() == doctest::Approx(0.25));
  CHECK(Energy::polytope(skew_interval_gauge(), 2.0).d() == doctest::Approx(1.0));
}

TEST_CASE("reflection") {
  std::mt19937_64 rng(5);
  for (const auto& [name, e] : energy_zoo_2d()) {
    CAPTURE(name);
    const Energy r = Energy::reflected(e);
    const Energy rr = Energy::reflected(r);
    CHECK(r.kind() == EnergyKind::Reflected);
    for (int k = 0; k < 200; ++k) {
      const Vec z = random_vec(rng, 2);
      CHECK(r.eval(z) == e.eval(-z));
      CHECK(rr.eval(z) == e.eval(z));
    }
  }
}

TEST_CASE("homogeneity, convexity and growth sandwich") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> lam(0.0, 10.0);
  auto zoo = energy_zoo_2d();
  for (auto& e : energy_zoo_1d()) zoo.push_back(e);
  for (const auto& [name, e] : zoo) {
    CAPTURE(name);
    for (int k = 0; k < 1000; ++k) {
      const Vec z = random_vec(rng, e.dim());
      const Vec w = random_vec(rng, e.dim());
      const double l = lam(rng);
      const double hz = e.eval(z);
      CHECK(std::abs(e.eval(l * z) - std::pow(l, e.p()) * hz) <= 1e-10 * (1 + std::pow(l, e.p()) * hz));
      CHECK(hz >= 0.0);
      CHECK(e.eval(0.5 * (z + w)) <= 0.5 * (hz + e.eval(w)) + 1e-12);
      const double r = std::pow(z.norm(), e.p());
      CHECK(e.c() * r <= hz * (1 + 1e-12));
      CHECK(hz <= e.d() * r * (1 + 1e-12));
    }
  }
}

TEST_CASE("subgradient and Euler inequalities on random points") {
  std::mt19937_64 rng(3);
  auto zoo = energy_zoo_2d();
  for (auto& e : energy_zoo_1d()) zoo.push_back(e);
  for (const auto& [name, e] : zoo) {
    CAPTURE(name);
    const bool polytope = e.canonical().kind() == EnergyKind::Polytope;
    for (int k = 0; k < 1000; ++k) {
      const Vec z = random_vec(rng, e.dim());
      const Vec w = random_vec(rng, e.dim());
      for (const auto& xi : e.subdiff(z).generators) {
        CHECK(e.eval(z + w) - e.eval(z) - xi.dot(w) >= -1e-9);
        const double defect = euler_defect(e, z, xi);
        CHECK(defect >= -1e-12 * (1 + e.eval(z)));
        if (polytope) CHECK(std::abs(defect) <= 1e-12 * (1 + e.eval(z)));
      }
    }
  }
}

TEST_CASE("energy json") {
  const Energy e = Energy::reflected(Energy::polytope(skew_box_gauge(), 3.0));
  const Energy back = Energy::from_json(e.to_json());
  CHECK(back.kind() == EnergyKind::Reflected);
  CHECK(back.eval(vec({-1.3, 0.4})) == e.eval(vec({-1.3, 0.4})));

  const auto parsed = Energy::from_json(nlohmann::json::parse(R"({"kind":"orthant_quadratic","weights":[2,1,1,2]})"));
  CHECK(parsed.eval(vec({1, -1})) == 4.0);

  try {
    Energy::from_json(nlohmann::json::parse(R"({"kind":"polytope","p":2,"facets":[[1,0],[0,"x"]]})"), "/energy");
    FAIL("expected a schema error");
  } catch (const SchemaError& err) {
    CHECK(err.path() == "/energy/facets/1/1");
  }
  CHECK_THROWS_AS(Energy::from_json(nlohmann::json::parse(R"({"kind":"polytope","p":2,"facets":[[1,0],[0,1]]})")),
                  SchemaError);
  CHECK_THROWS_AS(Energy::from_json(nlohmann::json::parse(R"({"kind":"spline"})")), SchemaError);
}
