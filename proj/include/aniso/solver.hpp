#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "aniso/convex_solver.hpp"
#include "aniso/fields_grid.hpp"
#include "aniso/gauge_energy.hpp"
#include "aniso/reaction.hpp"

namespace aniso {

// Worker count for independent multi-start runs: ANISO_THREADS, default 1.
int worker_threads();

// argmin of sum H(Dv) h^N - sum g v h^N, certified.
SubproblemResult semilinearized_solve(const Energy& energy, const Domain& domain, const ScalarField& g,
                                      double tol = 1e-10, const Vec* warm_start = nullptr);

struct XiRecovery {
  Mat xi;                       // dim x cells, the selection at the smallest epsilon
  std::vector<double> epsilons; // empty for differentiable kinds
  std::vector<double> max_defect;   // per epsilon: max_c |p H(D_c u) - (xi_c, D_c u)|
  std::vector<double> mean_defect;
  double balance_residual = 0.0;    // max-norm of D^T xi - g (diagnostic)
};

// Differentiable kinds: xi = grad H(Du). Polytope gauges: gradient of
// H_eps(z) = (M(z)^2 + eps^2 s^2)^{p/2} - (eps s)^p, s = max_c M(D_c u),
// for eps in {1e-3, 1e-4, 1e-5}; on facet ties the active normals are
// averaged.
XiRecovery recover_xi(const Energy& energy, const ScalarField& u, const ScalarField& g);

struct CriticalPointOptions {
  double tol_fp = 1e-8;
  int max_outer = 500;
  // Damping; unset means 0.7, or 1 when f does not depend on t.
  std::optional<double> omega;
  double gap_tol = 1e-10;
};

struct CriticalPointResult {
  ScalarField u;
  int iterations = 0;
  double fixed_point_residual = 0.0;     // |argmin J_u - u|_inf / (1 + |u|_inf)
  double subproblem_optimality_gap = 0.0;  // J_u(u) - min J_u, certified
  double identity_defect = 0.0;          // |p int H(Du) - int f(u) u|
  double identity_scale = 0.0;           // 1 + p int H(Du)
  double euler_mean = 0.0;
  double euler_max = 0.0;
  double J = 0.0;
  double balance_residual = 0.0;
  bool nonnegativity_expected = false;
  double min_value = 0.0;
};

CriticalPointResult critical_point(const Energy& energy, const DomainPtr& domain, const Reaction& reaction,
                                   const ScalarField& u_init, const CriticalPointOptions& options = {});

// J(u) = int H(Du) - int F(x, u).
double energy_functional(const Energy& energy, const Reaction& reaction, const ScalarField& u);

// J_u(v) = int H(Dv) - int f(x, u) v.
double semilinearized_functional(const Energy& energy, const Reaction& reaction, const ScalarField& u,
                                 const ScalarField& v);

struct PerturbationTest {
  int count = 0;
  double worst_excess = 0.0;  // max of J_u(u) - J_u(v) over the perturbations
  double tol = 0.0;
  bool pass = false;
};

// J_u(u) <= J_u(v) + tol (1 + |J_u(u)|) for `count` random perturbations v of
// size 1e-3 (1 + |u|_inf).
PerturbationTest perturbation_test(const Energy& energy, const Reaction& reaction, const ScalarField& u, int count,
                                   unsigned long long seed, double tol = 1e-10);

struct EigenOptions {
  double tol = 1e-8;
  int max_iter = 400;
  int starts = 5;
  unsigned long long seed = 12345;
};

struct EigenResult {
  double lambda = 0.0;
  ScalarField v;
  SignConstraint constraint = SignConstraint::Free;
  std::vector<double> history;  // accepted Rayleigh quotients, non-increasing
  int best_start = 0;
  double c_opt() const { return 1.0 / lambda; }
};

// int H(Dv) / int |v|^p.
double rayleigh_quotient(const Energy& energy, const ScalarField& v);

// Nonlinear inverse power iteration v <- argmin_{cone} int H(Dw) -
// int |v|^{p-2} v w, renormalized to |v|_p = 1, from several deterministic
// starts; the lowest quotient is kept.
EigenResult eigen(const Energy& energy, const DomainPtr& domain, SignConstraint constraint,
                  const EigenOptions& options = {});

struct EigenRelations {
  double lambda = 0.0;
  double lambda_plus = 0.0;
  double lambda_minus = 0.0;
  double min_relation_defect = 0.0;  // |lambda - min(lambda+, lambda-)| / lambda
  bool min_relation_pass = false;
  // Name of a domain symmetry T with H(-T z) = H(z), or empty.
  std::string symmetry;
  std::optional<double> symmetric_defect;  // |lambda+ - lambda-| / lambda
  bool pass = false;
};

EigenRelations eigen_relations_check(const Energy& energy, const DomainPtr& domain, double tol_min = 1e-8,
                                     double tol_sym = 1e-6, const EigenOptions& options = {});

struct MinimumPrinciple {
  double min_interior = 0.0;
  double min_away = 0.0;   // minimum outside the boundary layer of width 3h
  double threshold = 0.0;  // 1e-6 |u|_inf
  bool pass = false;
};

MinimumPrinciple minimum_principle_check(const ScalarField& u);

struct SupBoundCheck {
  double measured = 0.0;
  double bound = 0.0;
  bool applicable = false;  // N >= 2 and q < p*
  bool pass = false;
};

SupBoundCheck sup_bound_check(const Energy& energy, const Reaction& reaction, const ScalarField& u);

// int (f(u)/u^{p-1} - f(v)/v^{p-1}) (u^p - v^p) for positive u, v.
double picone_cross_check(const Reaction& reaction, double p, const ScalarField& u, const ScalarField& v);

struct UniquenessOptions {
  int starts = 10;
  double tol = 1e-6;
  unsigned long long seed = 2024;
  // Start amplitudes span [1, amplitude_span] geometrically.
  double amplitude_span = 1e3;
  int comparison_fields = 50;
  CriticalPointOptions critical;
};

struct UniquenessReport {
  std::string classification;
  bool hypothesis_met = false;
  std::optional<std::array<double, 2>> monotonicity_witness;
  std::vector<CriticalPointResult> runs;
  std::vector<std::string> failures;
  // Part 1: J(u) <= J(v) over the comparison corpus.
  double part1_worst = 0.0;
  bool part1 = true;
  // Part 2: max pairwise distance / |u|_inf.
  std::optional<double> part2_distance;
  // Part 3: worst pairwise proportionality residual; constants relative to the first run.
  std::optional<bool> part3;
  std::vector<double> proportionality_constants;
  // Part 4: Rayleigh quotients against lambda_1^+.
  std::optional<double> lambda_plus;
  std::vector<double> rayleigh;
  std::optional<bool> part4;
  std::optional<double> picone_cross;
  bool pass = false;
};

UniquenessReport uniqueness_experiment(const Energy& energy, const DomainPtr& domain, const Reaction& reaction,
                                       const UniquenessOptions& options = {});

}  // namespace aniso
