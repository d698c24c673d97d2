#pragma once

#include <array>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "aniso/error.hpp"
#include "aniso/types.hpp"

namespace aniso {

// Measure of the unit ball, N = 1, 2, 3.
double unit_ball_measure(int dim);

enum class DomainKind { Interval, Rectangle, Mask2d, PathGraph };

std::string to_string(DomainKind kind);

// One forward-difference cell. The anchor is a grid node that may lie
// outside the interior (a Dirichlet ghost); `stencil[0]` is the anchor's
// interior index and `stencil[1 + a]` the interior index of its +e_a
// neighbour, with -1 for ghosts.
struct Cell {
  std::array<int, 2> anchor{};
  std::array<int, 3> stencil{-1, -1, -1};
};

// An orthogonal map of R^N that carries the cell structure onto itself.
// `node_map[k]` is the interior index of the image of node k.
struct DomainSymmetry {
  std::string name;
  Mat transform;
  std::vector<int> node_map;
};

// Structured grid domain: the interior is a boolean mask on a gx x gy grid
// (gy = 1 in 1D) with spacing (hx, hy); every node outside the mask carries
// the value 0. Interior nodes are numbered lexicographically in (i, j).
class Domain {
 public:
  static Domain interval(int n, double length);
  static Domain rectangle(int nx, int ny, double lx, double ly);
  static Domain mask2d(int nx, int ny, double h, std::vector<bool> mask, std::array<double, 2> origin = {0, 0});
  // Nodes strictly inside the disk of the given radius centred at 0.
  static Domain disk(double radius, double h);
  // n x n square grid with its upper-right quadrant removed.
  static Domain l_shape(int n, double h);
  // Nodes 0..n-1, endpoints held at 0. Du = (u(0)-u(1), ..., u(n-2)-u(n-1)).
  static Domain path_graph(int n);

  DomainKind kind() const { return kind_; }
  int dim() const { return dim_; }
  int num_nodes() const { return static_cast<int>(nodes_.size()); }
  int num_cells() const { return static_cast<int>(cells_.size()); }
  int grid_x() const { return gx_; }
  int grid_y() const { return gy_; }
  double spacing(int axis) const { return h_[axis]; }
  // Quadrature weight of a node or cell: h^N (1 on path graphs).
  double weight() const;
  double measure() const { return weight() * num_nodes(); }

  const std::vector<Cell>& cells() const { return cells_; }
  const std::vector<DomainSymmetry>& symmetries() const { return symmetries_; }

  // Grid indices (as reported in CSV) and coordinates of interior node k.
  std::array<int, 2> node_index(int k) const;
  std::array<double, 2> node_coord(int k) const;
  int interior_index(int i, int j) const;  // internal grid indices, -1 if ghost

  bool connected() const;

  // Forward-difference operator as a (dim * cells) x nodes matrix, rows
  // ordered cell-major.
  const SparseMat& gradient_matrix() const { return grad_; }

  // Interior nodes whose stencil distance to a ghost is less than `layers`.
  std::vector<bool> boundary_layer(int layers) const;

  nlohmann::json to_json() const;
  static Domain from_json(const nlohmann::json& j, const std::string& path = "");

 private:
  Domain() = default;
  void build();

  DomainKind kind_ = DomainKind::Interval;
  int dim_ = 1;
  int gx_ = 0;
  int gy_ = 1;
  std::array<double, 2> h_{1.0, 1.0};
  std::array<double, 2> origin_{0.0, 0.0};
  int index_offset_ = 0;
  double gradient_sign_ = 1.0;
  std::vector<bool> mask_;
  std::vector<int> grid_to_node_;
  std::vector<std::array<int, 2>> nodes_;
  std::vector<Cell> cells_;
  std::vector<DomainSymmetry> symmetries_;
  SparseMat grad_;
  nlohmann::json description_;
};

using DomainPtr = std::shared_ptr<const Domain>;

// Nodal values on the interior of a domain; zero outside.
class ScalarField {
 public:
  ScalarField(DomainPtr domain, Vec values);
  static ScalarField zeros(DomainPtr domain);
  static ScalarField constant(DomainPtr domain, double value);

  const Domain& domain() const { return *domain_; }
  const DomainPtr& domain_ptr() const { return domain_; }
  const Vec& values() const { return values_; }
  int size() const { return static_cast<int>(values_.size()); }
  double operator[](int k) const { return values_(k); }

  ScalarField operator+(const ScalarField& other) const;
  ScalarField operator-(const ScalarField& other) const;
  ScalarField operator*(double s) const;
  ScalarField positive_part() const;
  ScalarField negative_part() const;  // u_- = max(-u, 0)
  ScalarField truncated_above(double k) const;  // (u - k)_+
  ScalarField min_with(double k) const;  // min(u, k)

  double max_abs() const { return values_.cwiseAbs().maxCoeff(); }
  double min() const { return values_.minCoeff(); }
  double max() const { return values_.maxCoeff(); }

 private:
  DomainPtr domain_;
  Vec values_;
};

// Per-cell vectors Du, stored column-wise (dim x cells).
class GradientField {
 public:
  GradientField(DomainPtr domain, Mat values);
  const Domain& domain() const { return *domain_; }
  const Mat& values() const { return values_; }
  Vec cell(int c) const { return values_.col(c); }
  int num_cells() const { return static_cast<int>(values_.cols()); }

 private:
  DomainPtr domain_;
  Mat values_;
};

GradientField gradient(const ScalarField& u);

// Quadrature over nodes (h^N per node) and over cells (h^N per cell).
double integrate(const Vec& node_values, const Domain& domain);
double integrate(const ScalarField& u);
double integrate_cells(const Vec& cell_values, const Domain& domain);

double lp_norm(const ScalarField& u, double p);
double level_set_measure(const ScalarField& u, double k);

// Value of u attached to each cell: the anchor value when the anchor is
// interior, else the mean over interior nodes of the stencil.
Vec cell_values(const ScalarField& u);

// Transpose action sum_c D_c^T xi_c of the gradient (xi is dim x cells).
Vec gradient_transpose(const Domain& domain, const Mat& xi);

void write_csv(std::ostream& out, const ScalarField& u);
ScalarField read_csv(std::istream& in, DomainPtr domain);

nlohmann::json field_to_json(const ScalarField& u);
ScalarField field_from_json(const nlohmann::json& j, DomainPtr domain, const std::string& path = "");

}  // namespace aniso
