#pragma once

#include <optional>
#include <string>

#include "aniso/fields_grid.hpp"
#include "aniso/gauge_energy.hpp"

namespace aniso {

// Path graph 0..n-1 with u(0) = u(n-1) = 0 and edge differences
// z_e = u(e) - u(e+1). A 2D energy acts on consecutive edge pairs
// (z_0, z_1), (z_2, z_3), ... (a trailing unpaired edge is padded with 0);
// a 1D energy acts on every edge.
struct ToyProblem {
  int nodes = 3;
  Energy energy = Energy::orthant_quadratic({1, 1, 1, 1});
};

enum class ToySign { Plus, Minus };

double toy_energy(const ToyProblem& problem, const Vec& interior);

struct ToyResult {
  double lambda;
  ScalarField u;
  // Exhaustive grid search (n <= 5): step 1e-3, refined twice by 10x.
  std::optional<double> brute_force;
};

// inf { sum H(Du) : max |u| = 1, +-u >= 0 }.
ToyResult toy_eigen(const ToyProblem& problem, ToySign sign);

double toy_brute_force(const ToyProblem& problem, ToySign sign);

// sum over edge pairs of H(z) + H(w) - H(z v w) - H(z ^ w) with z = Du,
// w = Dv and componentwise max / min. Zero for energies separable in the
// two coordinates (orthant-quadratic).
double toy_modularity_check(const ToyProblem& problem, const Vec& u, const Vec& v);

// For the stated example data (n = 3, weights (a, 1, a, 1), a > 1) the
// claimed values are lambda+ = 1 < a = lambda-. Returns a description of
// the mismatch with the computed values, or nothing when the data differ
// from the example or agree with the claim.
std::optional<std::string> example_discrepancy(const ToyProblem& problem, double lambda_plus, double lambda_minus);

}  // namespace aniso
