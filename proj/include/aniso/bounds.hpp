#pragma once

#include <vector>

#include "aniso/fields_grid.hpp"
#include "aniso/gauge_energy.hpp"

namespace aniso {

// Critical Sobolev exponent Np/(N-p); +inf for p >= N (any finite q is
// admissible when p = N).
double critical_exponent(int dim, double p);

double gn_constant(int dim, double p, double q);

struct GNCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
};

// Both sides of the Gagliardo-Nirenberg inequality by quadrature on a 2D
// grid (zero extension outside the mask). Contract: ratio <= 1.05.
GNCheck gn_verify(const ScalarField& u, double p, double q);

struct IterationParams {
  double b = 0.0;
  double beta = 0.0;
  double gamma = 1.0;
  double delta = 0.0;
  double q = 1.0;
  double h0 = 1.0;

  double A() const;
  void validate() const;
};

// A^{(gamma+1)/(gamma beta)} (b^{1/gamma} I0)^{gamma/beta}.
double degiorgi_clause(const IterationParams& params, double i0);
// max{2 h0, degiorgi_clause}.
double degiorgi_sup(const IterationParams& params, double i0);

// Iteration parameters of the L-infinity bound for H >= c|z|^p and
// sign(t) f(x,t) <= mu (|t| + theta)^{q-1}.
IterationParams sup_bound_params(double c, double mu, double theta, int dim, double p, double q);

// max{theta, degiorgi_clause(params, uq_norm)} with uq_norm = int |u|^q.
double theorem_sup_bound(double c, double mu, double theta, int dim, double p, double q, double uq_norm);

struct LevelSetRow {
  double k = 0.0;
  double lhs = 0.0;  // int |D(u-k)_+|^p
  double rhs = 0.0;  // (mu/c) 4^{q-1} int_{u >= k} k^q + (u-k)^q
  bool pass = false;
};

struct LevelSetReport {
  std::vector<LevelSetRow> rows;
  bool pass = true;
};

// Rows for every k >= theta/2 in k_grid; pass means lhs <= 1.05 rhs.
LevelSetReport levelset_verify(const ScalarField& u, const Energy& energy, double mu, double theta, double q,
                               const std::vector<double>& k_grid);

}  // namespace aniso
