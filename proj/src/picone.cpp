#include "aniso/picone.hpp"

#include <cmath>
#include <sstream>

namespace aniso {

Mat subgradient_selection(const Energy& energy, const ScalarField& u) {
  const Mat du = gradient(u).values();
  Mat xi(du.rows(), du.cols());
  for (int c = 0; c < du.cols(); ++c) xi.col(c) = energy.subdiff(du.col(c)).generators.front();
  return xi;
}

PiconeResidual picone_residual(const Energy& energy, const ScalarField& u, const ScalarField& v, const Mat& xi) {
  const Domain& d = u.domain();
  if (v.size() != u.size() || &v.domain() != &d) throw Error("picone_residual: u and v live on different domains");
  if (energy.dim() != d.dim()) throw Error("picone_residual: energy dimension does not match domain");
  if (xi.rows() != d.dim() || xi.cols() != d.num_cells()) throw Error("picone_residual: xi has the wrong shape");
  if (!(u.min() > 0.0) || u.min() < 1e-12 * u.max_abs()) throw Error("Picone requires inf u > 0");
  if (v.min() < 0.0) throw Error("Picone requires v >= 0");

  const double p = energy.p();
  const Mat du = gradient(u).values();
  const Mat dv = gradient(v).values();

  PiconeResidual out;
  int worst_cell = -1;
  for (int c = 0; c < d.num_cells(); ++c) {
    const double defect = subgradient_defect(energy, du.col(c), xi.col(c));
    if (defect > out.worst_xi_defect) {
      out.worst_xi_defect = defect;
      worst_cell = c;
    }
  }
  if (out.worst_xi_defect > 1e-8) {
    std::ostringstream msg;
    msg << "picone_residual: xi is not a subgradient selection (worst defect " << out.worst_xi_defect << " at cell "
        << worst_cell << ")";
    throw Error(msg.str());
  }

  const Vec uc = cell_values(u);
  const Vec vc = cell_values(v);
  Vec quotient(u.size());
  for (int k = 0; k < u.size(); ++k) quotient(k) = std::pow(v[k], p) / std::pow(u[k], p - 1.0);
  const Mat dq = gradient(ScalarField(u.domain_ptr(), quotient)).values();

  out.chain.resize(d.num_cells());
  out.discrete.resize(d.num_cells());
  int equal = 0;
  for (int c = 0; c < d.num_cells(); ++c) {
    const double s = vc(c) / uc(c);
    const Vec chain = (1.0 - p) * std::pow(s, p) * du.col(c) + p * std::pow(s, p - 1.0) * dv.col(c);
    const double h = energy.eval(dv.col(c));
    out.chain(c) = h - xi.col(c).dot(chain) / p;
    out.discrete(c) = h - xi.col(c).dot(dq.col(c)) / p;
    if (std::abs(out.chain(c)) <= 1e-12 * (1.0 + h)) ++equal;
  }
  out.min_chain = out.chain.minCoeff();
  out.min_discrete = out.discrete.minCoeff();
  out.equality_cells_fraction = static_cast<double>(equal) / d.num_cells();
  return out;
}

std::optional<double> proportionality_detect(const ScalarField& u, const ScalarField& v, double tol) {
  const double uu = u.values().squaredNorm();
  const double vv = v.values().squaredNorm();
  if (uu == 0.0 || vv == 0.0) return std::nullopt;
  const double k = u.values().dot(v.values()) / uu;
  if (!(k > 0.0)) return std::nullopt;
  if ((v.values() - k * u.values()).norm() > tol * std::sqrt(vv)) return std::nullopt;
  return k;
}

}  // namespace aniso
