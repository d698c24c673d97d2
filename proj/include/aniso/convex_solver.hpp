#pragma once

#include "aniso/fields_grid.hpp"
#include "aniso/gauge_energy.hpp"

namespace aniso {

enum class SignConstraint { Free, Nonnegative, Nonpositive };

std::string to_string(SignConstraint sign);

struct SubproblemOptions {
  SignConstraint sign = SignConstraint::Free;
  // Stop when the certified duality gap is below gap_tol * (1 + |objective|).
  double gap_tol = 1e-10;
  int max_newton = 600;
};

// Minimizer of the discrete semi-linearized functional
//   Phi(v) = w * sum_cells H(D_c v) - w * sum_nodes g v,   w = h^N,
// together with its optimality certificate: a per-cell field xi with
// xi_c in dH(D_c v) and sign multipliers nu >= 0 such that
//   D^T xi - g - nu / w ~ 0   (discrete weak Euler-Lagrange inclusion).
struct SubproblemResult {
  Vec v;
  Mat xi;                 // dim x cells
  Vec sign_multiplier;    // nu, zero where unconstrained
  double objective = 0.0;
  double gap = 0.0;       // certified duality-gap bound
  double balance_residual = 0.0;  // max-norm of D^T xi - g - nu / w
  double max_euler_defect = 0.0;  // max_c |p H(D_c v) - (xi_c, D_c v)|
  int newton_steps = 0;
};

// Smooth kinds are minimized by damped Newton; polytope gauges through the
// epigraph form  min w sum t_c^p - w g.v  s.t.  t_c >= (a_i, D_c v),
// solved by a log-barrier method. Sign constraints enter as barriers.
SubproblemResult minimize_semilinear(const Energy& energy, const Domain& domain, const Vec& g,
                                     const SubproblemOptions& options, const Vec* warm_start = nullptr);

// w * sum_c H(D_c v).
double energy_integral(const Energy& energy, const Domain& domain, const Vec& v);

// Phi(v) above.
double semilinear_objective(const Energy& energy, const Domain& domain, const Vec& g, const Vec& v);

// Per-cell H(D_c v).
Vec cell_energies(const Energy& energy, const Domain& domain, const Vec& v);

}  // namespace aniso
