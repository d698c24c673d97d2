#include "aniso/fields_grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

namespace aniso {

double unit_ball_measure(int dim) {
  switch (dim) {
    case 1: return 2.0;
    case 2: return std::numbers::pi;
    case 3: return 4.0 * std::numbers::pi / 3.0;
    default: throw Error("unit_ball_measure: only N = 1, 2, 3 are tabulated");
  }
}

std::string to_string(DomainKind kind) {
  switch (kind) {
    case DomainKind::Interval: return "interval";
    case DomainKind::Rectangle: return "rectangle";
    case DomainKind::Mask2d: return "mask2d";
    case DomainKind::PathGraph: return "path_graph";
  }
  return "unknown";
}

Domain Domain::interval(int n, double length) {
  if (n < 1) throw Error("interval: need at least one interior node");
  if (!(length > 0.0)) throw Error("interval: length must be > 0");
  Domain d;
  d.kind_ = DomainKind::Interval;
  d.dim_ = 1;
  d.gx_ = n;
  d.gy_ = 1;
  d.h_ = {length / (n + 1), 1.0};
  d.origin_ = {d.h_[0], 0.0};
  d.index_offset_ = 1;
  d.mask_.assign(n, true);
  d.description_ = {{"kind", "interval"}, {"n", n}, {"length", length}};
  d.build();
  return d;
}

Domain Domain::rectangle(int nx, int ny, double lx, double ly) {
  if (nx < 1 || ny < 1) throw Error("rectangle: need at least one interior node per axis");
  if (!(lx > 0.0) || !(ly > 0.0)) throw Error("rectangle: side lengths must be > 0");
  Domain d;
  d.kind_ = DomainKind::Rectangle;
  d.dim_ = 2;
  d.gx_ = nx;
  d.gy_ = ny;
  d.h_ = {lx / (nx + 1), ly / (ny + 1)};
  d.origin_ = d.h_;
  d.index_offset_ = 1;
  d.mask_.assign(static_cast<std::size_t>(nx) * ny, true);
  d.description_ = {{"kind", "rectangle"}, {"nx", nx}, {"ny", ny}, {"lx", lx}, {"ly", ly}};
  d.build();
  return d;
}

Domain Domain::mask2d(int nx, int ny, double h, std::vector<bool> mask, std::array<double, 2> origin) {
  if (nx < 1 || ny < 1) throw Error("mask2d: empty grid");
  if (!(h > 0.0)) throw Error("mask2d: spacing must be > 0");
  if (mask.size() != static_cast<std::size_t>(nx) * ny) throw Error("mask2d: mask size does not match grid");
  if (std::none_of(mask.begin(), mask.end(), [](bool b) { return b; })) throw Error("mask2d: mask is empty");
  Domain d;
  d.kind_ = DomainKind::Mask2d;
  d.dim_ = 2;
  d.gx_ = nx;
  d.gy_ = ny;
  d.h_ = {h, h};
  d.origin_ = origin;
  d.mask_ = std::move(mask);
  nlohmann::json rows = nlohmann::json::array();
  for (int j = 0; j < ny; ++j) {
    std::string row;
    for (int i = 0; i < nx; ++i) row += d.mask_[static_cast<std::size_t>(j) * nx + i] ? '1' : '0';
    rows.push_back(row);
  }
  d.description_ = {{"kind", "mask2d"}, {"nx", nx}, {"ny", ny}, {"h", h}, {"origin", origin}, {"mask", rows}};
  d.build();
  return d;
}

Domain Domain::disk(double radius, double h) {
  if (!(radius > 0.0) || !(h > 0.0)) throw Error("disk: radius and spacing must be > 0");
  const int m = static_cast<int>(std::ceil(radius / h));
  const int n = 2 * m + 1;
  std::vector<bool> mask(static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const double x = (i - m) * h;
      const double y = (j - m) * h;
      mask[static_cast<std::size_t>(j) * n + i] = std::hypot(x, y) < radius * (1.0 - 1e-12);
    }
  }
  Domain d = mask2d(n, n, h, std::move(mask), {-m * h, -m * h});
  d.description_ = {{"kind", "disk"}, {"radius", radius}, {"h", h}};
  return d;
}

Domain Domain::l_shape(int n, double h) {
  if (n < 2) throw Error("l_shape: need n >= 2");
  std::vector<bool> mask(static_cast<std::size_t>(n) * n);
  const int half = n / 2;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) mask[static_cast<std::size_t>(j) * n + i] = !(i >= half && j >= half);
  }
  Domain d = mask2d(n, n, h, std::move(mask), {h, h});
  d.description_ = {{"kind", "l_shape"}, {"n", n}, {"h", h}};
  return d;
}

Domain Domain::path_graph(int n) {
  if (n < 3) throw Error("path_graph: need n >= 3 nodes");
  Domain d;
  d.kind_ = DomainKind::PathGraph;
  d.dim_ = 1;
  d.gx_ = n - 2;
  d.gy_ = 1;
  d.h_ = {1.0, 1.0};
  d.origin_ = {1.0, 0.0};
  d.index_offset_ = 1;
  d.gradient_sign_ = -1.0;
  d.mask_.assign(n - 2, true);
  d.description_ = {{"kind", "path_graph"}, {"n", n}};
  d.build();
  return d;
}

double Domain::weight() const { return dim_ == 1 ? h_[0] : h_[0] * h_[1]; }

int Domain::interior_index(int i, int j) const {
  if (i < 0 || j < 0 || i >= gx_ || j >= gy_) return -1;
  return grid_to_node_[static_cast<std::size_t>(j) * gx_ + i];
}

std::array<int, 2> Domain::node_index(int k) const {
  return {nodes_[k][0] + index_offset_, nodes_[k][1] + index_offset_};
}

std::array<double, 2> Domain::node_coord(int k) const {
  return {origin_[0] + nodes_[k][0] * h_[0], dim_ == 2 ? origin_[1] + nodes_[k][1] * h_[1] : 0.0};
}

void Domain::build() {
  grid_to_node_.assign(static_cast<std::size_t>(gx_) * gy_, -1);
  nodes_.clear();
  for (int i = 0; i < gx_; ++i) {
    for (int j = 0; j < gy_; ++j) {
      if (mask_[static_cast<std::size_t>(j) * gx_ + i]) {
        grid_to_node_[static_cast<std::size_t>(j) * gx_ + i] = static_cast<int>(nodes_.size());
        nodes_.push_back({i, j});
      }
    }
  }

  cells_.clear();
  const int jlo = dim_ == 2 ? -1 : 0;
  for (int i = -1; i < gx_; ++i) {
    for (int j = jlo; j < gy_; ++j) {
      Cell c;
      c.anchor = {i, j};
      c.stencil[0] = interior_index(i, j);
      c.stencil[1] = interior_index(i + 1, j);
      if (dim_ == 2) c.stencil[2] = interior_index(i, j + 1);
      if (c.stencil[0] >= 0 || c.stencil[1] >= 0 || c.stencil[2] >= 0) cells_.push_back(c);
    }
  }

  std::vector<Eigen::Triplet<double>> triplets;
  for (int c = 0; c < num_cells(); ++c) {
    const Cell& cell = cells_[c];
    for (int a = 0; a < dim_; ++a) {
      const double inv = gradient_sign_ / h_[a];
      const int row = c * dim_ + a;
      if (cell.stencil[1 + a] >= 0) triplets.emplace_back(row, cell.stencil[1 + a], inv);
      if (cell.stencil[0] >= 0) triplets.emplace_back(row, cell.stencil[0], -inv);
    }
  }
  grad_.resize(num_cells() * dim_, num_nodes());
  grad_.setFromTriplets(triplets.begin(), triplets.end());
  grad_.makeCompressed();

  symmetries_.clear();
  if (dim_ == 1) {
    DomainSymmetry s;
    s.name = "midpoint reflection";
    s.transform = -Mat::Identity(1, 1);
    s.node_map.resize(num_nodes());
    for (int k = 0; k < num_nodes(); ++k) s.node_map[k] = num_nodes() - 1 - k;
    symmetries_.push_back(std::move(s));
  } else if (gx_ == gy_ && h_[0] == h_[1]) {
    bool symmetric = true;
    for (int i = 0; i < gx_ && symmetric; ++i) {
      for (int j = 0; j < gy_; ++j) {
        if ((interior_index(i, j) >= 0) != (interior_index(j, i) >= 0)) {
          symmetric = false;
          break;
        }
      }
    }
    if (symmetric) {
      DomainSymmetry s;
      s.name = "transpose";
      s.transform = Mat::Zero(2, 2);
      s.transform(0, 1) = s.transform(1, 0) = 1.0;
      s.node_map.resize(num_nodes());
      for (int k = 0; k < num_nodes(); ++k) s.node_map[k] = interior_index(nodes_[k][1], nodes_[k][0]);
      symmetries_.push_back(std::move(s));
    }
  }
}

bool Domain::connected() const {
  if (nodes_.empty()) return false;
  std::vector<bool> seen(nodes_.size(), false);
  std::deque<int> queue{0};
  seen[0] = true;
  int count = 1;
  while (!queue.empty()) {
    const int k = queue.front();
    queue.pop_front();
    const auto [i, j] = nodes_[k];
    const int nbrs[4][2] = {{i + 1, j}, {i - 1, j}, {i, j + 1}, {i, j - 1}};
    for (const auto& nb : nbrs) {
      const int m = interior_index(nb[0], nb[1]);
      if (m >= 0 && !seen[m]) {
        seen[m] = true;
        ++count;
        queue.push_back(m);
      }
    }
  }
  return count == num_nodes();
}

std::vector<bool> Domain::boundary_layer(int layers) const {
  std::vector<int> dist(nodes_.size(), -1);
  std::deque<int> queue;
  for (int k = 0; k < num_nodes(); ++k) {
    const auto [i, j] = nodes_[k];
    bool touches = interior_index(i + 1, j) < 0 || interior_index(i - 1, j) < 0;
    if (dim_ == 2) touches = touches || interior_index(i, j + 1) < 0 || interior_index(i, j - 1) < 0;
    if (touches) {
      dist[k] = 1;
      queue.push_back(k);
    }
  }
  while (!queue.empty()) {
    const int k = queue.front();
    queue.pop_front();
    const auto [i, j] = nodes_[k];
    const int nbrs[4][2] = {{i + 1, j}, {i - 1, j}, {i, j + 1}, {i, j - 1}};
    for (const auto& nb : nbrs) {
      const int m = interior_index(nb[0], nb[1]);
      if (m >= 0 && dist[m] < 0) {
        dist[m] = dist[k] + 1;
        queue.push_back(m);
      }
    }
  }
  std::vector<bool> out(nodes_.size());
  for (int k = 0; k < num_nodes(); ++k) out[k] = dist[k] >= 0 && dist[k] <= layers;
  return out;
}

nlohmann::json Domain::to_json() const { return description_; }

Domain Domain::from_json(const nlohmann::json& j, const std::string& path) {
  if (!j.is_object()) throw SchemaError(path, "domain must be an object");
  if (!j.contains("kind") || !j["kind"].is_string()) throw SchemaError(path + "/kind", "missing or not a string");
  const std::string kind = j["kind"];

  auto number = [&](const char* key) {
    if (!j.contains(key)) throw SchemaError(path + "/" + key, "missing");
    if (!j[key].is_number()) throw SchemaError(path + "/" + key, "expected a number");
    return j[key].get<double>();
  };
  auto integer = [&](const char* key) {
    if (!j.contains(key)) throw SchemaError(path + "/" + key, "missing");
    if (!j[key].is_number_integer()) throw SchemaError(path + "/" + key, "expected an integer");
    return j[key].get<int>();
  };

  try {
    if (kind == "interval") return interval(integer("n"), number("length"));
    if (kind == "rectangle") return rectangle(integer("nx"), integer("ny"), number("lx"), number("ly"));
    if (kind == "disk") return disk(number("radius"), number("h"));
    if (kind == "l_shape") return l_shape(integer("n"), number("h"));
    if (kind == "path_graph") return path_graph(integer("n"));
    if (kind == "mask2d") {
      const int nx = integer("nx");
      const int ny = integer("ny");
      const double h = number("h");
      if (!j.contains("mask") || !j["mask"].is_array() || static_cast<int>(j["mask"].size()) != ny) {
        throw SchemaError(path + "/mask", "expected ny rows of '0'/'1' strings");
      }
      std::vector<bool> mask(static_cast<std::size_t>(nx) * ny);
      for (int r = 0; r < ny; ++r) {
        const auto& row = j["mask"][r];
        if (!row.is_string() || static_cast<int>(row.get<std::string>().size()) != nx) {
          throw SchemaError(path + "/mask/" + std::to_string(r), "expected a string of length nx");
        }
        const std::string s = row;
        for (int i = 0; i < nx; ++i) mask[static_cast<std::size_t>(r) * nx + i] = s[i] == '1';
      }
      std::array<double, 2> origin{0.0, 0.0};
      if (j.contains("origin")) origin = j["origin"].get<std::array<double, 2>>();
      return mask2d(nx, ny, h, std::move(mask), origin);
    }
  } catch (const SchemaError&) {
    throw;
  } catch (const Error& e) {
    throw SchemaError(path, e.what());
  }
  throw SchemaError(path + "/kind", "unknown domain kind '" + kind + "'");
}

ScalarField::ScalarField(DomainPtr domain, Vec values) : domain_(std::move(domain)), values_(std::move(values)) {
  if (!domain_) throw Error("field: null domain");
  if (values_.size() != domain_->num_nodes()) throw Error("field: value count does not match domain");
}

ScalarField ScalarField::zeros(DomainPtr domain) {
  const int n = domain->num_nodes();
  return ScalarField(std::move(domain), Vec::Zero(n));
}

ScalarField ScalarField::constant(DomainPtr domain, double value) {
  const int n = domain->num_nodes();
  return ScalarField(std::move(domain), Vec::Constant(n, value));
}

ScalarField ScalarField::operator+(const ScalarField& other) const {
  if (other.domain_ != domain_) throw Error("field: domain mismatch");
  return ScalarField(domain_, values_ + other.values_);
}

ScalarField ScalarField::operator-(const ScalarField& other) const {
  if (other.domain_ != domain_) throw Error("field: domain mismatch");
  return ScalarField(domain_, values_ - other.values_);
}

ScalarField ScalarField::operator*(double s) const { return ScalarField(domain_, values_ * s); }

ScalarField ScalarField::positive_part() const { return ScalarField(domain_, values_.cwiseMax(0.0)); }

ScalarField ScalarField::negative_part() const { return ScalarField(domain_, (-values_).cwiseMax(0.0)); }

ScalarField ScalarField::truncated_above(double k) const {
  return ScalarField(domain_, (values_.array() - k).max(0.0).matrix());
}

ScalarField ScalarField::min_with(double k) const { return ScalarField(domain_, values_.cwiseMin(k)); }

GradientField::GradientField(DomainPtr domain, Mat values) : domain_(std::move(domain)), values_(std::move(values)) {}

GradientField gradient(const ScalarField& u) {
  const Domain& d = u.domain();
  const Vec flat = d.gradient_matrix() * u.values();
  return GradientField(u.domain_ptr(), Eigen::Map<const Mat>(flat.data(), d.dim(), d.num_cells()));
}

double integrate(const Vec& node_values, const Domain& domain) {
  if (node_values.size() != domain.num_nodes()) throw Error("integrate: size mismatch");
  return node_values.sum() * domain.weight();
}

double integrate(const ScalarField& u) { return integrate(u.values(), u.domain()); }

double integrate_cells(const Vec& cell_values, const Domain& domain) {
  if (cell_values.size() != domain.num_cells()) throw Error("integrate_cells: size mismatch");
  return cell_values.sum() * domain.weight();
}

double lp_norm(const ScalarField& u, double p) {
  if (std::isinf(p)) return u.max_abs();
  return std::pow(integrate(u.values().cwiseAbs().array().pow(p).matrix(), u.domain()), 1.0 / p);
}

double level_set_measure(const ScalarField& u, double k) {
  const auto count = (u.values().array() >= k).count();
  return static_cast<double>(count) * u.domain().weight();
}

Vec cell_values(const ScalarField& u) {
  const Domain& d = u.domain();
  Vec out(d.num_cells());
  for (int c = 0; c < d.num_cells(); ++c) {
    const Cell& cell = d.cells()[c];
    if (cell.stencil[0] >= 0) {
      out(c) = u[cell.stencil[0]];
      continue;
    }
    double sum = 0.0;
    int n = 0;
    for (int a = 0; a < d.dim(); ++a) {
      if (cell.stencil[1 + a] >= 0) {
        sum += u[cell.stencil[1 + a]];
        ++n;
      }
    }
    out(c) = sum / n;
  }
  return out;
}

Vec gradient_transpose(const Domain& domain, const Mat& xi) {
  if (xi.rows() != domain.dim() || xi.cols() != domain.num_cells()) throw Error("gradient_transpose: shape mismatch");
  const Eigen::Map<const Vec> flat(xi.data(), xi.size());
  return domain.gradient_matrix().transpose() * flat;
}

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_csv(std::ostream& out, const ScalarField& u) {
  const Domain& d = u.domain();
  out << (d.dim() == 2 ? "i,j,x,y,u\n" : "i,x,u\n");
  for (int k = 0; k < d.num_nodes(); ++k) {
    const auto idx = d.node_index(k);
    const auto x = d.node_coord(k);
    if (d.dim() == 2) {
      out << idx[0] << ',' << idx[1] << ',' << fmt17(x[0]) << ',' << fmt17(x[1]) << ',' << fmt17(u[k]) << '\n';
    } else {
      out << idx[0] << ',' << fmt17(x[0]) << ',' << fmt17(u[k]) << '\n';
    }
  }
}

ScalarField read_csv(std::istream& in, DomainPtr domain) {
  const Domain& d = *domain;
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("/csv", "empty field file");
  const std::string expected = d.dim() == 2 ? "i,j,x,y,u" : "i,x,u";
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != expected) throw SchemaError("/csv/header", "expected '" + expected + "', got '" + line + "'");

  std::map<std::array<int, 2>, int> lookup;
  for (int k = 0; k < d.num_nodes(); ++k) {
    auto idx = d.node_index(k);
    if (d.dim() == 1) idx[1] = 0;
    lookup[idx] = k;
  }

  Vec values = Vec::Zero(d.num_nodes());
  std::vector<bool> seen(d.num_nodes(), false);
  int row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    std::stringstream ss(line);
    std::vector<std::string> cols;
    std::string cell;
    while (std::getline(ss, cell, ',')) cols.push_back(cell);
    const std::size_t want = d.dim() == 2 ? 5 : 3;
    const std::string at = "/csv/row/" + std::to_string(row);
    if (cols.size() != want) throw SchemaError(at, "expected " + std::to_string(want) + " columns");
    try {
      std::array<int, 2> idx{std::stoi(cols[0]), d.dim() == 2 ? std::stoi(cols[1]) : 0};
      const auto it = lookup.find(idx);
      if (it == lookup.end()) throw SchemaError(at, "node is not interior to the domain");
      values(it->second) = std::stod(cols.back());
      seen[it->second] = true;
    } catch (const std::logic_error&) {
      throw SchemaError(at, "unparsable number");
    }
  }
  if (row == 0) throw SchemaError("/csv", "field has no rows");
  if (std::find(seen.begin(), seen.end(), false) != seen.end()) throw SchemaError("/csv", "field does not cover every interior node");
  return ScalarField(std::move(domain), std::move(values));
}

nlohmann::json field_to_json(const ScalarField& u) {
  return {{"domain", u.domain().to_json()},
          {"values", std::vector<double>(u.values().data(), u.values().data() + u.size())}};
}

ScalarField field_from_json(const nlohmann::json& j, DomainPtr domain, const std::string& path) {
  if (!j.is_object() || !j.contains("values") || !j["values"].is_array()) {
    throw SchemaError(path + "/values", "expected an array of numbers");
  }
  const auto& arr = j["values"];
  if (static_cast<int>(arr.size()) != domain->num_nodes()) {
    throw SchemaError(path + "/values", "length does not match the domain's interior node count");
  }
  Vec v(domain->num_nodes());
  for (int k = 0; k < v.size(); ++k) {
    if (!arr[k].is_number()) throw SchemaError(path + "/values/" + std::to_string(k), "expected a number");
    v(k) = arr[k].get<double>();
  }
  return ScalarField(std::move(domain), std::move(v));
}

}  // namespace aniso
