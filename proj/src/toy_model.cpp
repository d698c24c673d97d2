#include "aniso/toy_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace aniso {

namespace {

void validate(const ToyProblem& problem) {
  if (problem.nodes < 3) throw Error("toy model needs at least 3 nodes");
  const Energy& e = problem.energy;
  if (e.dim() != 1 && e.dim() != 2) throw Error("toy model energy must act on edges (1D) or edge pairs (2D)");
  if (e.kind() == EnergyKind::OrthantQuadratic) {
    for (double w : e.weights()) {
      if (!(w > 0.0)) throw Error("toy model weights must be > 0");
    }
  }
}

Vec edges(const ToyProblem& problem, const Vec& interior) {
  const int n = problem.nodes;
  Vec full = Vec::Zero(n);
  full.segment(1, n - 2) = interior;
  Vec z(n - 1);
  for (int e = 0; e < n - 1; ++e) z(e) = full(e) - full(e + 1);
  return z;
}

// Blocks of the edge vector the energy acts on.
int block_count(const ToyProblem& problem) {
  const int m = problem.nodes - 1;
  return problem.energy.dim() == 1 ? m : (m + 1) / 2;
}

Vec block(const ToyProblem& problem, const Vec& z, int b) {
  const int dim = problem.energy.dim();
  Vec out = Vec::Zero(dim);
  for (int a = 0; a < dim; ++a) {
    const int e = b * dim + a;
    if (e < z.size()) out(a) = z(e);
  }
  return out;
}

Vec toy_gradient(const ToyProblem& problem, const Vec& interior) {
  const int n = problem.nodes;
  const int dim = problem.energy.dim();
  const Vec z = edges(problem, interior);
  Vec gz = Vec::Zero(z.size());
  for (int b = 0; b < block_count(problem); ++b) {
    const Vec xi = problem.energy.subdiff(block(problem, z, b)).generators.front();
    for (int a = 0; a < dim; ++a) {
      const int e = b * dim + a;
      if (e < z.size()) gz(e) = xi(a);
    }
  }
  // z_e = u(e) - u(e+1): du(k) receives +gz(k) - gz(k-1).
  Vec g(n - 2);
  for (int k = 1; k <= n - 2; ++k) g(k - 1) = gz(k) - gz(k - 1);
  return g;
}

// Projected gradient with Armijo backtracking on the box s*[0,1] with the
// pinned coordinate held at s.
Vec minimize_on_box(const ToyProblem& problem, double s, int pinned, Vec x) {
  const int m = static_cast<int>(x.size());
  auto project = [&](Vec y) {
    for (int k = 0; k < m; ++k) y(k) = s * std::clamp(s * y(k), 0.0, 1.0);
    y(pinned) = s;
    return y;
  };
  x = project(x);
  double fx = toy_energy(problem, x);
  double step = 1.0;
  for (int it = 0; it < 200000; ++it) {
    const Vec g = toy_gradient(problem, x);
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls) {
      const Vec y = project(x - step * g);
      const double fy = toy_energy(problem, y);
      if (fy <= fx - 1e-4 / step * (y - x).squaredNorm()) {
        const double change = (y - x).cwiseAbs().maxCoeff();
        x = y;
        moved = change > 0.0;
        fx = fy;
        step *= 2.0;
        if (change < 1e-15) moved = false;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
  }
  return x;
}

double box_energy_min_grid(const ToyProblem& problem, double s, int pinned, std::vector<double> lo,
                           std::vector<double> hi, double stepsize, Vec& best) {
  const int m = problem.nodes - 2;
  std::vector<int> free;
  for (int k = 0; k < m; ++k) {
    if (k != pinned) free.push_back(k);
  }
  std::vector<int> counts;
  for (std::size_t j = 0; j < free.size(); ++j) {
    counts.push_back(static_cast<int>(std::floor((hi[j] - lo[j]) / stepsize + 0.5)) + 1);
  }
  double best_value = std::numeric_limits<double>::infinity();
  std::vector<int> idx(free.size(), 0);
  Vec x = Vec::Zero(m);
  x(pinned) = s;
  while (true) {
    for (std::size_t j = 0; j < free.size(); ++j) x(free[j]) = s * std::min(1.0, lo[j] + idx[j] * stepsize);
    const double value = toy_energy(problem, x);
    if (value < best_value) {
      best_value = value;
      best = x;
    }
    std::size_t j = 0;
    while (j < free.size() && ++idx[j] == counts[j]) idx[j++] = 0;
    if (j == free.size()) break;
  }
  return best_value;
}

}  // namespace

double toy_energy(const ToyProblem& problem, const Vec& interior) {
  validate(problem);
  if (interior.size() != problem.nodes - 2) throw Error("toy_energy: expected n - 2 interior values");
  const Vec z = edges(problem, interior);
  double total = 0.0;
  for (int b = 0; b < block_count(problem); ++b) total += problem.energy.eval(block(problem, z, b));
  return total;
}

ToyResult toy_eigen(const ToyProblem& problem, ToySign sign) {
  validate(problem);
  const double s = sign == ToySign::Plus ? 1.0 : -1.0;
  const int m = problem.nodes - 2;
  const auto domain = std::make_shared<const Domain>(Domain::path_graph(problem.nodes));

  double lambda = std::numeric_limits<double>::infinity();
  Vec best;
  for (int pinned = 0; pinned < m; ++pinned) {
    // Deterministic restarts: the zero field and the constant s.
    for (const Vec& start : {Vec(Vec::Zero(m)), Vec(Vec::Constant(m, s))}) {
      const Vec x = m == 1 ? Vec::Constant(1, s) : minimize_on_box(problem, s, pinned, start);
      const double value = toy_energy(problem, x);
      if (value < lambda) {
        lambda = value;
        best = x;
      }
    }
  }
  ToyResult out{lambda, ScalarField(domain, best), std::nullopt};
  if (problem.nodes <= 5) out.brute_force = toy_brute_force(problem, sign);
  return out;
}

double toy_brute_force(const ToyProblem& problem, ToySign sign) {
  validate(problem);
  if (problem.nodes > 5) throw Error("toy_brute_force: limited to n <= 5");
  const double s = sign == ToySign::Plus ? 1.0 : -1.0;
  const int m = problem.nodes - 2;
  double best = std::numeric_limits<double>::infinity();
  for (int pinned = 0; pinned < m; ++pinned) {
    std::vector<double> lo(m - 1, 0.0), hi(m - 1, 1.0);
    double step = 1e-3;
    Vec x;
    double value = box_energy_min_grid(problem, s, pinned, lo, hi, step, x);
    for (int refine = 0; refine < 2; ++refine) {
      int j = 0;
      for (int k = 0; k < m; ++k) {
        if (k == pinned) continue;
        const double c = s * x(k);
        lo[j] = std::max(0.0, c - step);
        hi[j] = std::min(1.0, c + step);
        ++j;
      }
      step /= 10.0;
      value = std::min(value, box_energy_min_grid(problem, s, pinned, lo, hi, step, x));
    }
    best = std::min(best, value);
  }
  return best;
}

double toy_modularity_check(const ToyProblem& problem, const Vec& u, const Vec& v) {
  validate(problem);
  if (problem.energy.dim() != 2) throw Error("toy_modularity_check: needs an edge-pair (2D) energy");
  const Vec zu = edges(problem, u);
  const Vec zv = edges(problem, v);
  double defect = 0.0;
  for (int b = 0; b < block_count(problem); ++b) {
    const Vec z = block(problem, zu, b);
    const Vec w = block(problem, zv, b);
    const Energy& h = problem.energy;
    defect += h.eval(z) + h.eval(w) - h.eval(z.cwiseMax(w)) - h.eval(z.cwiseMin(w));
  }
  return defect;
}

std::optional<std::string> example_discrepancy(const ToyProblem& problem, double lambda_plus, double lambda_minus) {
  const Energy& e = problem.energy;
  if (problem.nodes != 3 || e.kind() != EnergyKind::OrthantQuadratic) return std::nullopt;
  const auto& w = e.weights();
  const double a = w[0];
  if (!(a > 1.0) || w[1] != 1.0 || w[2] != a || w[3] != 1.0) return std::nullopt;
  if (std::abs(lambda_plus - 1.0) <= 1e-9 && std::abs(lambda_minus - a) <= 1e-9) return std::nullopt;
  std::ostringstream msg;
  msg.precision(17);
  msg << "stated example values lambda+ = 1, lambda- = a = " << a << "; direct evaluation of the stated definitions gives"
      << " lambda+ = " << lambda_plus << ", lambda- = " << lambda_minus
      << " (weights (a,1,1,a) do produce lambda+ < lambda-)";
  return msg.str();
}

}  // namespace aniso
