#pragma once

#include <optional>

#include "aniso/fields_grid.hpp"
#include "aniso/gauge_energy.hpp"

namespace aniso {

struct PiconeResidual {
  // H(Dv) - (1/p)(xi, D(v^p / u^{p-1})) per cell, with the gradient of the
  // quotient taken by the chain rule (normative) and by forward differences
  // of the nodal quotient (diagnostic, O(h) off).
  Vec chain;
  Vec discrete;
  double min_chain = 0.0;
  double min_discrete = 0.0;
  double equality_cells_fraction = 0.0;  // cells with |chain| <= 1e-12 (1 + H(Dv))
  double worst_xi_defect = 0.0;
};

// Pointwise values of u and v on a cell are those of cell_values().
PiconeResidual picone_residual(const Energy& energy, const ScalarField& u, const ScalarField& v, const Mat& xi);

// One generator of dH(D_c u) per cell.
Mat subgradient_selection(const Energy& energy, const ScalarField& u);

// k = <u, v> / <u, u> when ||v - k u||_2 <= tol ||v||_2 and k > 0.
std::optional<double> proportionality_detect(const ScalarField& u, const ScalarField& v, double tol);

}  // namespace aniso
