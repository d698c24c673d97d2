#include "aniso/convex_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/SparseCholesky>

namespace aniso {

std::string to_string(SignConstraint sign) {
  switch (sign) {
    case SignConstraint::Free: return "free";
    case SignConstraint::Nonnegative: return "+";
    case SignConstraint::Nonpositive: return "-";
  }
  return "unknown";
}

Vec cell_energies(const Energy& energy, const Domain& domain, const Vec& v) {
  const int dim = domain.dim();
  if (energy.dim() != dim) throw Error("energy dimension does not match domain dimension");
  const Vec flat = domain.gradient_matrix() * v;
  Vec out(domain.num_cells());
  for (int c = 0; c < domain.num_cells(); ++c) out(c) = energy.eval(flat.segment(c * dim, dim));
  return out;
}

double energy_integral(const Energy& energy, const Domain& domain, const Vec& v) {
  return integrate_cells(cell_energies(energy, domain, v), domain);
}

double semilinear_objective(const Energy& energy, const Domain& domain, const Vec& g, const Vec& v) {
  return energy_integral(energy, domain, v) - domain.weight() * g.dot(v);
}

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

// Barrier/Newton engine over x = (v, t). `t` is present only in the
// epigraph formulation of polytope gauges; all inequality constraints are
// linear, r = C x > 0.
class SemilinearSolver {
 public:
  SemilinearSolver(const Energy& energy, const Domain& domain, const Vec& g, const SubproblemOptions& options)
      : energy_(energy.canonical()),
        domain_(domain),
        g_(g),
        options_(options),
        dim_(domain.dim()),
        n_(domain.num_nodes()),
        m_(domain.num_cells()),
        w_(domain.weight()),
        epigraph_(energy_.kind() == EnergyKind::Polytope),
        p_(energy.p()) {
    if (energy.dim() != dim_) throw Error("energy dimension does not match domain dimension");
    if (g.size() != n_) throw Error("reaction field size does not match domain");
    if (!(p_ > 1.0)) throw Error("semilinearized_solve requires p > 1");
    if (!g.allFinite()) throw Error("semilinearized_solve: non-finite reaction values");
    build_constraints();
  }

  SubproblemResult solve(const Vec* warm_start) {
    Vec x = initial_point(warm_start);
    const int J = static_cast<int>(C_.rows());
    int steps = 0;
    double decrement2 = 0.0;

    if (J == 0) {
      const double target = options_.gap_tol * (1.0 + std::abs(objective(x)));
      decrement2 = center(x, 0.0, 0.1 * target, steps, grad_tol());
      mu_ = 0.0;
    } else {
      const double f0 = std::abs(objective(x));
      mu_ = std::max(f0, 1e-6) / J;
      while (true) {
        const double target = options_.gap_tol * (1.0 + std::abs(objective(x)));
        const bool last = J * mu_ <= 0.5 * target;
        decrement2 = center(x, mu_, last ? 0.05 * target : 0.1 * J * mu_, steps);
        if (last) break;
        mu_ = std::max(mu_ / 20.0, 0.25 * target / J);
        if (steps >= options_.max_newton) break;
      }
      polish(x, steps);
    }

    SubproblemResult out;
    out.v = x.head(n_);
    out.objective = objective(x);
    out.gap = J * mu_ + 0.5 * decrement2;
    out.newton_steps = steps;
    certificate(x, out);
    if (steps >= options_.max_newton && out.gap > options_.gap_tol * (1.0 + std::abs(out.objective))) {
      throw Error("semilinearized_solve: no convergence within " + std::to_string(options_.max_newton) +
                  " Newton steps (gap " + std::to_string(out.gap) + ", balance residual " +
                  std::to_string(out.balance_residual) + ")");
    }
    return out;
  }

 private:
  double grad_tol() const { return 1e-10 * w_ * (1.0 + g_.cwiseAbs().maxCoeff()); }

  int num_vars() const { return epigraph_ ? n_ + m_ : n_; }

  double sign() const { return options_.sign == SignConstraint::Nonpositive ? -1.0 : 1.0; }

  void build_constraints() {
    Triplets trip;
    int row = 0;
    const SparseMat& G = domain_.gradient_matrix();
    if (epigraph_) {
      const auto& facets = energy_.gauge().facets();
      facets_ = static_cast<int>(facets.size());
      // Row (c, i): t_c - a_i^T G_c v.
      for (int c = 0; c < m_; ++c) {
        for (int i = 0; i < facets_; ++i, ++row) trip.emplace_back(row, n_ + c, 1.0);
      }
      for (int k = 0; k < G.outerSize(); ++k) {
        for (SparseMat::InnerIterator it(G, k); it; ++it) {
          const int c = static_cast<int>(it.row()) / dim_;
          const int a = static_cast<int>(it.row()) % dim_;
          for (int i = 0; i < facets_; ++i) {
            const double coef = facets[i](a) * it.value();
            if (coef != 0.0) trip.emplace_back(c * facets_ + i, k, -coef);
          }
        }
      }
    }
    if (options_.sign != SignConstraint::Free) {
      for (int k = 0; k < n_; ++k, ++row) trip.emplace_back(row, k, sign());
    }
    C_.resize(row, num_vars());
    C_.setFromTriplets(trip.begin(), trip.end());
    C_.makeCompressed();
  }

  Vec initial_point(const Vec* warm_start) const {
    Vec x = Vec::Zero(num_vars());
    if (warm_start) {
      if (warm_start->size() != n_) throw Error("warm start size does not match domain");
      x.head(n_) = *warm_start;
    }
    if (options_.sign != SignConstraint::Free) {
      const double floor = 1e-3 * std::max(1.0, x.head(n_).cwiseAbs().maxCoeff());
      for (int k = 0; k < n_; ++k) x(k) = sign() * std::max(sign() * x(k), floor);
    }
    if (epigraph_) {
      const Vec flat = domain_.gradient_matrix() * x.head(n_);
      const Gauge& gauge = energy_.gauge();
      for (int c = 0; c < m_; ++c) {
        const double mk = gauge.eval(flat.segment(c * dim_, dim_));
        x(n_ + c) = mk + 0.1 * (1.0 + mk);
      }
    }
    return x;
  }

  double objective(const Vec& x) const {
    const Vec v = x.head(n_);
    double f = -w_ * g_.dot(v);
    if (epigraph_) {
      f += w_ * x.tail(m_).array().pow(p_).sum();
    } else {
      f += w_ * cell_energies(energy_, domain_, v).sum();
    }
    return f;
  }

  void objective_derivatives(const Vec& x, Vec& grad, SparseMat& hess) const {
    const int N = num_vars();
    grad = Vec::Zero(N);
    grad.head(n_) = -w_ * g_;
    Triplets trip;
    if (epigraph_) {
      for (int c = 0; c < m_; ++c) {
        const double t = x(n_ + c);
        grad(n_ + c) = w_ * p_ * std::pow(t, p_ - 1.0);
        trip.emplace_back(n_ + c, n_ + c, w_ * p_ * (p_ - 1.0) * std::pow(t, p_ - 2.0));
      }
      hess.resize(N, N);
      hess.setFromTriplets(trip.begin(), trip.end());
      return;
    }
    const SparseMat& G = domain_.gradient_matrix();
    const Vec flat = G * x.head(n_);
    Vec cell_grad(dim_ * m_);
    Triplets btrip;
    Vec gz;
    Mat hz;
    for (int c = 0; c < m_; ++c) {
      energy_.derivatives(flat.segment(c * dim_, dim_), gz, hz);
      cell_grad.segment(c * dim_, dim_) = gz;
      for (int a = 0; a < dim_; ++a) {
        for (int b = 0; b < dim_; ++b) {
          if (hz(a, b) != 0.0) btrip.emplace_back(c * dim_ + a, c * dim_ + b, hz(a, b));
        }
      }
    }
    SparseMat B(dim_ * m_, dim_ * m_);
    B.setFromTriplets(btrip.begin(), btrip.end());
    grad.head(n_) += w_ * (G.transpose() * cell_grad);
    const SparseMat Hv = w_ * (SparseMat(G.transpose()) * B * G);
    hess = Hv;
    hess.conservativeResize(N, N);
  }

  double barrier_value(const Vec& x, double mu) const {
    if (C_.rows() == 0) return objective(x);
    const Vec r = C_ * x;
    if ((r.array() <= 0.0).any()) return std::numeric_limits<double>::infinity();
    return objective(x) - mu * r.array().log().sum();
  }

  Vec barrier_gradient(const Vec& x, double mu) const {
    Vec grad;
    SparseMat hess;
    objective_derivatives(x, grad, hess);
    if (C_.rows() > 0) grad -= mu * (C_.transpose() * (C_ * x).cwiseInverse());
    return grad;
  }

  // Newton iterations on f - mu sum log r. Stops once the decrement^2 / 2
  // is below tol and, when grad_tol > 0, the gradient max-norm is below
  // grad_tol (multipliers mu / r are only accurate near the exact center).
  double center(Vec& x, double mu, double tol, int& steps, double grad_tol = 0.0) {
    const int N = num_vars();
    double decrement2 = std::numeric_limits<double>::infinity();
    Eigen::SimplicialLDLT<SparseMat> ldlt;
    double best_grad = std::numeric_limits<double>::infinity();
    int stalled = 0;
    while (steps < options_.max_newton) {
      Vec grad;
      SparseMat hess;
      objective_derivatives(x, grad, hess);
      Vec r;
      if (C_.rows() > 0) {
        r = C_ * x;
        const Vec inv = r.cwiseInverse();
        grad -= mu * (C_.transpose() * inv);
        const Vec inv2 = inv.cwiseAbs2();
        hess += mu * (SparseMat(C_.transpose()) * inv2.asDiagonal() * C_);
      }

      // Levenberg shift for singular Hessians (e.g. s|z|^p with p > 2 at
      // flat cells); raised until the factorization succeeds.
      double shift = 0.0;
      const double diag_scale = std::max(hess.diagonal().cwiseAbs().maxCoeff(), 1e-300);
      Vec dx;
      for (int attempt = 0; attempt < 20; ++attempt) {
        SparseMat shifted = hess;
        if (shift > 0.0) {
          SparseMat eye(N, N);
          eye.setIdentity();
          shifted += shift * eye;
        }
        ldlt.compute(shifted);
        if (ldlt.info() == Eigen::Success) {
          dx = -ldlt.solve(grad);
          if (dx.allFinite() && grad.dot(dx) < 0.0) break;
          if (dx.allFinite() && grad.dot(dx) == 0.0) break;
        }
        shift = shift == 0.0 ? 1e-14 * diag_scale : shift * 100.0;
        dx.resize(0);
      }
      if (dx.size() == 0) throw Error("semilinearized_solve: Newton system could not be factorized");

      decrement2 = -grad.dot(dx);
      ++steps;
      const double grad_norm = grad.cwiseAbs().maxCoeff();
      if (decrement2 / 2.0 <= tol && (grad_tol <= 0.0 || grad_norm <= grad_tol)) break;
      // The gradient can sit at its round-off floor above grad_tol.
      stalled = decrement2 / 2.0 <= tol && grad_norm > 0.5 * best_grad ? stalled + 1 : 0;
      best_grad = std::min(best_grad, grad_norm);
      if (stalled >= 5) break;

      double alpha = 1.0;
      if (C_.rows() > 0) {
        const Vec dr = C_ * dx;
        for (int j = 0; j < r.size(); ++j) {
          if (dr(j) < 0.0) alpha = std::min(alpha, -0.99 * r(j) / dr(j));
        }
      }
      const double phi0 = barrier_value(x, mu);
      bool moved = false;
      for (int ls = 0; ls < 60; ++ls) {
        const Vec trial = x + alpha * dx;
        const double phi = barrier_value(trial, mu);
        if (phi <= phi0 - 1e-4 * alpha * decrement2) {
          x = trial;
          moved = true;
          break;
        }
        alpha *= 0.5;
      }
      // Below the round-off floor of phi the Armijo test is meaningless;
      // take the Newton step while it still shrinks the gradient.
      if (!moved) {
        const Vec trial = x + std::min(1.0, alpha * std::pow(2.0, 60)) * dx;
        if (!std::isfinite(barrier_value(trial, mu)) ||
            barrier_gradient(trial, mu).cwiseAbs().maxCoeff() >= grad_norm) {
          break;
        }
        x = trial;
      }
    }
    return decrement2;
  }

  // Primal-dual Newton on  grad f = C^T lambda,  lambda_j r_j = mu  from the
  // barrier point. Barrier multipliers mu / r inherit the centering error
  // amplified by 1 / r on nearly active rows; the primal-dual iteration
  // converges quadratically to the same central point with accurate lambda.
  void polish(Vec& x, int& steps) {
    lambda_ = mu_ * (C_ * x).cwiseInverse();
    auto residual = [&](const Vec& xx, const Vec& lam, Vec& rd, Vec& rc) {
      rd = barrier_gradient(xx, 0.0) - C_.transpose() * lam;
      rc = lam.cwiseProduct(C_ * xx).array() - mu_;
    };
    auto size = [&](const Vec& rd, const Vec& rc) {
      return std::max(rd.cwiseAbs().maxCoeff() / grad_tol(), rc.cwiseAbs().maxCoeff() / mu_);
    };
    Eigen::SimplicialLDLT<SparseMat> ldlt;
    Vec rd, rc;
    residual(x, lambda_, rd, rc);
    double current = size(rd, rc);
    for (int it = 0; it < 50 && current > 1e-2; ++it) {
      Vec grad;
      SparseMat hess;
      objective_derivatives(x, grad, hess);
      const Vec r = C_ * x;
      const Vec ratio = lambda_.cwiseQuotient(r);
      hess += SparseMat(C_.transpose()) * ratio.asDiagonal() * C_;
      ldlt.compute(hess);
      if (ldlt.info() != Eigen::Success) return;
      const Vec rhs = -rd - C_.transpose() * rc.cwiseQuotient(r);
      const Vec dx = ldlt.solve(rhs);
      const Vec dr = C_ * dx;
      const Vec dl = -(rc + lambda_.cwiseProduct(dr)).cwiseQuotient(r);
      double alpha = 1.0;
      for (int j = 0; j < r.size(); ++j) {
        if (dr(j) < 0.0) alpha = std::min(alpha, -0.99 * r(j) / dr(j));
        if (dl(j) < 0.0) alpha = std::min(alpha, -0.99 * lambda_(j) / dl(j));
      }
      ++steps;
      bool moved = false;
      for (int ls = 0; ls < 30; ++ls, alpha *= 0.5) {
        const Vec xt = x + alpha * dx;
        const Vec lt = lambda_ + alpha * dl;
        Vec rdt, rct;
        residual(xt, lt, rdt, rct);
        const double trial = size(rdt, rct);
        if (trial < current) {
          x = xt;
          lambda_ = lt;
          rd = rdt;
          rc = rct;
          current = trial;
          moved = true;
          break;
        }
      }
      if (!moved) return;
    }
  }

  void certificate(const Vec& x, SubproblemResult& out) const {
    const Vec v = x.head(n_);
    const Vec flat = domain_.gradient_matrix() * v;
    out.xi = Mat::Zero(dim_, m_);
    out.sign_multiplier = Vec::Zero(n_);
    Vec r;
    if (C_.rows() > 0) r = C_ * x;

    if (epigraph_) {
      const Gauge& gauge = energy_.gauge();
      const auto& facets = gauge.facets();
      for (int c = 0; c < m_; ++c) {
        const Vec z = flat.segment(c * dim_, dim_);
        const double mk = gauge.eval(z);
        if (!(mk > 0.0)) continue;
        Vec lam(facets_);
        for (int i = 0; i < facets_; ++i) lam(i) = lambda_(c * facets_ + i);
        const double top = lam.maxCoeff();
        Vec dir = Vec::Zero(dim_);
        double total = 0.0;
        for (int i = 0; i < facets_; ++i) {
          if (lam(i) >= 1e-3 * top) {
            dir += lam(i) * facets[i];
            total += lam(i);
          }
        }
        out.xi.col(c) = p_ * std::pow(mk, p_ - 1.0) * dir / total;
      }
    } else {
      Vec gz;
      Mat hz;
      for (int c = 0; c < m_; ++c) {
        energy_.derivatives(flat.segment(c * dim_, dim_), gz, hz);
        out.xi.col(c) = gz;
      }
    }
    if (options_.sign != SignConstraint::Free) {
      const int offset = epigraph_ ? m_ * facets_ : 0;
      for (int k = 0; k < n_; ++k) out.sign_multiplier(k) = lambda_(offset + k);
    }

    const Vec balance = gradient_transpose(domain_, out.xi) - g_ - sign() * out.sign_multiplier / w_;
    out.balance_residual = balance.cwiseAbs().maxCoeff();
    double defect = 0.0;
    for (int c = 0; c < m_; ++c) {
      const Vec z = flat.segment(c * dim_, dim_);
      defect = std::max(defect, std::abs(euler_defect(energy_, z, out.xi.col(c))));
    }
    out.max_euler_defect = defect;
  }

  const Energy& energy_;
  const Domain& domain_;
  const Vec& g_;
  SubproblemOptions options_;
  int dim_;
  int n_;
  int m_;
  double w_;
  bool epigraph_;
  double p_;
  int facets_ = 0;
  double mu_ = 0.0;
  Vec lambda_;
  SparseMat C_;
};

}  // namespace

SubproblemResult minimize_semilinear(const Energy& energy, const Domain& domain, const Vec& g,
                                     const SubproblemOptions& options, const Vec* warm_start) {
  SemilinearSolver solver(energy, domain, g, options);
  return solver.solve(warm_start);
}

}  // namespace aniso
