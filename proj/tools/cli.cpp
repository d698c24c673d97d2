#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>

#include "aniso/bounds.hpp"
#include "aniso/picone.hpp"
#include "aniso/solver.hpp"
#include "aniso/toy_model.hpp"

#ifndef ANISO_VERSION
#define ANISO_VERSION "0.0.0"
#endif

namespace aniso::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kConfigVersion = 1;

std::string to_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string read_file(const fs::path& path, const std::string& pointer) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError(pointer, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// Non-finite doubles become null rather than an invalid JSON token.
json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json vec_json(const Vec& v) {
  json out = json::array();
  for (int k = 0; k < v.size(); ++k) out.push_back(num(v(k)));
  return out;
}

// Shared state of one invocation.
struct Run {
  std::string command;
  fs::path out_dir = ".";
  std::optional<unsigned long long> seed_override;
  std::string inputs;  // concatenated bytes of every input, for the hash
  unsigned long long seed = 0;
  std::vector<std::string> outputs;

  void emit(const std::string& name, const std::string& text) {
    fs::create_directories(out_dir);
    write_file(out_dir / name, text);
    outputs.push_back(name);
  }
};

struct Config {
  json doc;
  fs::path base;  // directory of the config file
};

Config load_config(Run& run, const std::string& path) {
  const std::string text = read_file(path, "/");
  run.inputs += text;
  Config cfg;
  cfg.base = fs::path(path).parent_path();
  try {
    cfg.doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError("/", std::string("invalid JSON: ") + e.what());
  }
  if (!cfg.doc.is_object()) throw SchemaError("/", "config must be a JSON object");
  if (!cfg.doc.contains("version")) throw SchemaError("/version", "missing (mandatory)");
  if (!cfg.doc["version"].is_number_integer() || cfg.doc["version"].get<int>() != kConfigVersion) {
    throw SchemaError("/version", "unsupported version; expected " + std::to_string(kConfigVersion));
  }
  return cfg;
}

double number(const json& j, const std::string& key, double fallback, const std::string& at = "") {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) throw SchemaError(at + "/" + key, "expected a number");
  return j[key].get<double>();
}

double positive(const json& j, const std::string& key, double fallback, const std::string& at = "") {
  const double x = number(j, key, fallback, at);
  if (!(x > 0.0) || !std::isfinite(x)) throw SchemaError(at + "/" + key, "must be a positive number");
  return x;
}

int integer(const json& j, const std::string& key, int fallback, int min, const std::string& at = "") {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number_integer()) throw SchemaError(at + "/" + key, "expected an integer");
  const int v = j[key].get<int>();
  if (v < min) throw SchemaError(at + "/" + key, "must be >= " + std::to_string(min));
  return v;
}

const json& required(const json& j, const std::string& key) {
  if (!j.contains(key)) throw SchemaError("/" + key, "missing");
  return j[key];
}

std::string string_field(const json& j, const std::string& key) {
  const json& v = required(j, key);
  if (!v.is_string()) throw SchemaError("/" + key, "expected a string");
  return v.get<std::string>();
}

unsigned long long config_seed(Run& run, const json& doc, unsigned long long fallback) {
  unsigned long long seed = fallback;
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned()) throw SchemaError("/seed", "expected a non-negative integer");
    seed = doc["seed"].get<unsigned long long>();
  }
  if (run.seed_override) seed = *run.seed_override;
  run.seed = seed;
  return seed;
}

DomainPtr load_domain(const json& doc) {
  return std::make_shared<const Domain>(Domain::from_json(required(doc, "domain"), "/domain"));
}

Energy load_energy(const json& doc, const Domain& domain) {
  Energy e = Energy::from_json(required(doc, "energy"), "/energy");
  if (e.dim() != domain.dim()) throw SchemaError("/energy", "dimension does not match the domain");
  return e;
}

Reaction load_reaction(const json& doc, const Energy& energy, const Domain& domain) {
  Reaction r = Reaction::from_json(required(doc, "reaction"), energy.p(), "/reaction");
  try {
    r.check_nodes(domain.num_nodes());
  } catch (const Error& e) {
    throw SchemaError("/reaction/weights", e.what());
  }
  return r;
}

ScalarField load_field(Run& run, const Config& cfg, const std::string& key, const std::string& flag,
                       const DomainPtr& domain) {
  // Flags are relative to the working directory, config entries to the config file.
  fs::path path = flag;
  if (flag.empty()) {
    path = string_field(cfg.doc, key);
    if (path.is_relative()) path = cfg.base / path;
  }
  const std::string text = read_file(path, "/" + key);
  run.inputs += text;
  std::istringstream in(text);
  try {
    return read_csv(in, domain);
  } catch (const SchemaError& e) {
    throw SchemaError("/" + key, e.what());
  }
}

SignConstraint parse_sign(const std::string& s, const std::string& at) {
  if (s == "free") return SignConstraint::Free;
  if (s == "+" || s == "nonnegative") return SignConstraint::Nonnegative;
  if (s == "-" || s == "nonpositive") return SignConstraint::Nonpositive;
  throw SchemaError(at, "expected 'free', '+' or '-'");
}

CriticalPointOptions critical_options(const json& doc) {
  CriticalPointOptions o;
  o.tol_fp = positive(doc, "tol_fp", o.tol_fp);
  o.max_outer = integer(doc, "max_outer", o.max_outer, 1);
  o.gap_tol = positive(doc, "gap_tol", o.gap_tol);
  if (doc.contains("omega")) {
    const double w = number(doc, "omega", 0.7);
    if (!(w > 0.0 && w <= 1.0)) throw SchemaError("/omega", "must lie in (0, 1]");
    o.omega = w;
  }
  return o;
}

std::string csv_text(const ScalarField& u) {
  std::ostringstream out;
  write_csv(out, u);
  return out.str();
}

// --- solve -----------------------------------------------------------------

int cmd_solve(Run& run, const std::string& config_path) {
  const Config cfg = load_config(run, config_path);
  const json& doc = cfg.doc;
  const DomainPtr domain = load_domain(doc);
  const Energy energy = load_energy(doc, *domain);
  const Reaction reaction = load_reaction(doc, energy, *domain);
  const CriticalPointOptions opt = critical_options(doc);
  const double init = number(doc, "initial", 0.0);
  const unsigned long long seed = config_seed(run, doc, 1);
  const int perturbations = integer(doc, "perturbations", 100, 1);

  const auto cp = critical_point(energy, domain, reaction, ScalarField::constant(domain, init), opt);
  const auto pert = perturbation_test(energy, reaction, cp.u, perturbations, seed);
  const double identity_rel = cp.identity_defect / cp.identity_scale;
  const bool identity_pass = identity_rel <= 1e-6;

  const double envelope_violation = reaction.envelope_violation(domain->num_nodes());
  const bool envelope_pass = envelope_violation <= 1e-12;
  const auto sup = sup_bound_check(energy, reaction, cp.u);

  const bool nonneg_pass = !cp.nonnegativity_expected || cp.min_value >= -1e-12 * (1.0 + cp.u.max_abs());
  // Minimum principle: asserted for nontrivial solutions on connected
  // domains when f >= 0 on [0, |u|_inf].
  bool f_nonnegative = true;
  for (int k = 0; k < domain->num_nodes() && f_nonnegative; ++k) {
    for (int j = 0; j <= 16; ++j) f_nonnegative = f_nonnegative && reaction.eval(k, cp.u.max_abs() * j / 16.0) >= 0.0;
  }
  const bool mp_asserted = f_nonnegative && domain->connected() && cp.u.max() > 0.0;
  const auto mp = minimum_principle_check(cp.u);
  const bool mp_pass = !mp_asserted || mp.pass;

  const bool pass = identity_pass && pert.pass && envelope_pass && sup.pass && nonneg_pass && mp_pass;

  run.emit("solution.csv", csv_text(cp.u));
  json rep;
  rep["schema"] = "aniso.solve.v1";
  rep["seed"] = seed;
  rep["domain"] = domain->to_json();
  rep["energy"] = energy.to_json();
  rep["reaction"] = reaction.to_json();
  rep["solution_csv"] = "solution.csv";
  rep["result"] = {{"iterations", cp.iterations},
                   {"fixed_point_residual", num(cp.fixed_point_residual)},
                   {"subproblem_optimality_gap", num(cp.subproblem_optimality_gap)},
                   {"identity_defect", num(cp.identity_defect)},
                   {"euler_defect_mean", num(cp.euler_mean)},
                   {"euler_defect_max", num(cp.euler_max)},
                   {"J", num(cp.J)},
                   {"balance_residual", num(cp.balance_residual)},
                   {"min_value", num(cp.min_value)},
                   {"max_abs", num(cp.u.max_abs())}};
  rep["checks"] = {
      {"identity", {{"relative_defect", num(identity_rel)}, {"tol", 1e-6}, {"pass", identity_pass}}},
      {"perturbation",
       {{"count", pert.count}, {"worst_excess", num(pert.worst_excess)}, {"tol", num(pert.tol)}, {"pass", pert.pass}}},
      {"envelope", {{"violation", num(envelope_violation)}, {"pass", envelope_pass}}},
      {"sup_bound",
       {{"applicable", sup.applicable}, {"measured", num(sup.measured)}, {"bound", num(sup.bound)}, {"pass", sup.pass}}},
      {"nonnegativity", {{"expected", cp.nonnegativity_expected}, {"min_value", num(cp.min_value)}, {"pass", nonneg_pass}}},
      {"minimum_principle",
       {{"asserted", mp_asserted},
        {"min_interior", num(mp.min_interior)},
        {"min_away_from_boundary", num(mp.min_away)},
        {"threshold", num(mp.threshold)},
        {"pass", mp_pass}}},
      {"monotonicity",
       {{"declared", to_string(reaction.monotonicity())},
        {"holds", reaction.monotonicity_holds(energy.p(), domain->num_nodes())}}}};
  rep["pass"] = pass;
  run.emit("result.json", dump(rep));
  return pass ? 0 : 1;
}

// --- eigen -----------------------------------------------------------------

json relations_json(const EigenRelations& r) {
  json j = {{"lambda", num(r.lambda)},
            {"lambda_plus", num(r.lambda_plus)},
            {"lambda_minus", num(r.lambda_minus)},
            {"min_relation_defect", num(r.min_relation_defect)},
            {"min_relation_pass", r.min_relation_pass},
            {"symmetry", r.symmetry.empty() ? json(nullptr) : json(r.symmetry)},
            {"symmetric_defect", r.symmetric_defect ? num(*r.symmetric_defect) : json(nullptr)},
            {"pass", r.pass}};
  return j;
}

int cmd_eigen(Run& run, const std::string& config_path) {
  const Config cfg = load_config(run, config_path);
  const json& doc = cfg.doc;
  const DomainPtr domain = load_domain(doc);
  const Energy energy = load_energy(doc, *domain);
  const SignConstraint constraint =
      parse_sign(doc.contains("constraint") ? string_field(doc, "constraint") : "free", "/constraint");
  EigenOptions opt;
  opt.tol = positive(doc, "tol", opt.tol);
  opt.max_iter = integer(doc, "max_iter", opt.max_iter, 1);
  opt.starts = integer(doc, "starts", opt.starts, 1);
  opt.seed = config_seed(run, doc, opt.seed);
  bool with_relations = false;
  if (doc.contains("relations")) {
    if (!doc["relations"].is_boolean()) throw SchemaError("/relations", "expected a boolean");
    with_relations = doc["relations"].get<bool>();
  }

  const auto r = eigen(energy, domain, constraint, opt);
  const double norm = lp_norm(r.v, energy.p());
  const bool norm_pass = std::abs(norm - 1.0) <= 1e-10;
  bool sign_pass = true;
  if (constraint == SignConstraint::Nonnegative) sign_pass = r.v.min() >= 0.0;
  if (constraint == SignConstraint::Nonpositive) sign_pass = r.v.max() <= 0.0;
  bool monotone = true;
  for (std::size_t k = 1; k < r.history.size(); ++k) monotone = monotone && r.history[k] <= r.history[k - 1];
  bool pass = norm_pass && sign_pass && monotone;

  json rep;
  rep["schema"] = "aniso.eigen.v1";
  rep["seed"] = opt.seed;
  rep["domain"] = domain->to_json();
  rep["energy"] = energy.to_json();
  rep["constraint"] = to_string(constraint);
  rep["lambda"] = num(r.lambda);
  rep["c_opt"] = num(r.c_opt());
  rep["best_start"] = r.best_start;
  rep["history"] = r.history;
  rep["eigenfunction_csv"] = "eigenfunction.csv";
  rep["checks"] = {{"normalization", {{"lp_norm", num(norm)}, {"pass", norm_pass}}},
                   {"constraint", {{"pass", sign_pass}}},
                   {"monotone_history", {{"pass", monotone}}}};
  if (with_relations) {
    const auto rel = eigen_relations_check(energy, domain, 1e-8, 1e-6, opt);
    rep["relations"] = relations_json(rel);
    pass = pass && rel.pass;
  }
  rep["pass"] = pass;
  run.emit("eigenfunction.csv", csv_text(r.v));
  run.emit("eigen.json", dump(rep));
  return pass ? 0 : 1;
}

// --- classify --------------------------------------------------------------

int cmd_classify(Run& run, const std::string& config_path) {
  const Config cfg = load_config(run, config_path);
  const json& doc = cfg.doc;
  const DomainPtr domain = load_domain(doc);
  const Energy energy = load_energy(doc, *domain);
  const Reaction reaction = load_reaction(doc, energy, *domain);
  UniquenessOptions opt;
  opt.starts = integer(doc, "starts", opt.starts, 2);
  opt.tol = positive(doc, "tol", opt.tol);
  opt.amplitude_span = positive(doc, "amplitude_span", opt.amplitude_span);
  opt.comparison_fields = integer(doc, "comparison_fields", opt.comparison_fields, 0);
  opt.seed = config_seed(run, doc, opt.seed);
  opt.critical = critical_options(doc);

  const auto rep = uniqueness_experiment(energy, domain, reaction, opt);
  json runs = json::array();
  for (const auto& r : rep.runs) {
    runs.push_back({{"iterations", r.iterations},
                    {"fixed_point_residual", num(r.fixed_point_residual)},
                    {"identity_relative", num(r.identity_defect / r.identity_scale)},
                    {"J", num(r.J)},
                    {"max_abs", num(r.u.max_abs())},
                    {"min_value", num(r.min_value)}});
  }
  json out;
  out["schema"] = "aniso.classify.v1";
  out["seed"] = opt.seed;
  out["domain"] = domain->to_json();
  out["energy"] = energy.to_json();
  out["reaction"] = reaction.to_json();
  out["classification"] = rep.classification;
  out["hypothesis_met"] = rep.hypothesis_met;
  out["monotonicity_witness"] =
      rep.monotonicity_witness ? json({(*rep.monotonicity_witness)[0], (*rep.monotonicity_witness)[1]}) : json(nullptr);
  out["runs"] = runs;
  out["part1"] = {{"worst_excess", num(rep.part1_worst)}, {"pass", rep.part1}};
  out["part2_distance"] = rep.part2_distance ? num(*rep.part2_distance) : json(nullptr);
  out["part3"] = rep.part3 ? json(*rep.part3) : json(nullptr);
  json constants = json::array();
  for (double k : rep.proportionality_constants) constants.push_back(num(k));
  out["proportionality_constants"] = constants;
  out["part4"] = rep.part4 ? json({{"lambda_plus", num(*rep.lambda_plus)}, {"rayleigh", rep.rayleigh}, {"pass", *rep.part4}})
                           : json(nullptr);
  out["picone_cross"] = rep.picone_cross ? num(*rep.picone_cross) : json(nullptr);
  out["failures"] = rep.failures;
  out["pass"] = rep.pass;
  run.emit("classify.json", dump(out));
  return rep.pass ? 0 : 1;
}

// --- verify-picone ---------------------------------------------------------

int cmd_picone(Run& run, const std::string& config_path, const std::string& u_flag, const std::string& v_flag) {
  const Config cfg = load_config(run, config_path);
  const json& doc = cfg.doc;
  const DomainPtr domain = load_domain(doc);
  const Energy energy = load_energy(doc, *domain);
  const double tol = positive(doc, "tol", 1e-10);
  const double prop_tol = positive(doc, "proportionality_tol", 1e-8);
  const ScalarField u = load_field(run, cfg, "u", u_flag, domain);
  const ScalarField v = load_field(run, cfg, "v", v_flag, domain);

  const auto res = picone_residual(energy, u, v, subgradient_selection(energy, u));
  const auto k = proportionality_detect(u, v, prop_tol);
  const bool pass = res.min_chain >= -tol;
  json rep;
  rep["schema"] = "aniso.picone.v1";
  rep["energy"] = energy.to_json();
  rep["min_residual"] = num(res.min_chain);
  rep["min_discrete_residual"] = num(res.min_discrete);
  rep["equality_cells_fraction"] = num(res.equality_cells_fraction);
  rep["worst_xi_defect"] = num(res.worst_xi_defect);
  rep["proportionality_k"] = k ? num(*k) : json(nullptr);
  rep["tol"] = tol;
  rep["pass"] = pass;
  run.emit("picone.json", dump(rep));
  return pass ? 0 : 1;
}

// --- bound-check -----------------------------------------------------------

int cmd_bound(Run& run, const std::string& config_path, const std::string& u_flag) {
  const Config cfg = load_config(run, config_path);
  const json& doc = cfg.doc;
  const DomainPtr domain = load_domain(doc);
  const Energy energy = load_energy(doc, *domain);
  Envelope env;
  if (doc.contains("envelope")) {
    const json& e = doc["envelope"];
    if (!e.is_object()) throw SchemaError("/envelope", "expected an object");
    env = {number(e, "mu", 0.0, "/envelope"), number(e, "theta", 0.0, "/envelope"), number(e, "q", 1.0, "/envelope")};
    if (!(env.mu >= 0.0) || !(env.theta >= 0.0) || !(env.q >= 1.0)) {
      throw SchemaError("/envelope", "needs mu >= 0, theta >= 0, q >= 1");
    }
  } else {
    env = load_reaction(doc, energy, *domain).envelope();
  }
  const ScalarField u = load_field(run, cfg, "solution", u_flag, domain);

  std::vector<double> ks;
  if (doc.contains("k_grid")) {
    if (!doc["k_grid"].is_array()) throw SchemaError("/k_grid", "expected an array of numbers");
    for (std::size_t i = 0; i < doc["k_grid"].size(); ++i) {
      if (!doc["k_grid"][i].is_number()) throw SchemaError("/k_grid/" + std::to_string(i), "expected a number");
      ks.push_back(doc["k_grid"][i].get<double>());
    }
  } else {
    const int levels = integer(doc, "levels", 20, 1);
    for (int j = 0; j < levels; ++j) ks.push_back(u.max() * (j + 1) / (levels + 1));
  }

  const Reaction shape = Reaction::constant(0.0).with_envelope(env);
  const auto sup = sup_bound_check(energy, shape, u);
  const auto level = levelset_verify(u, energy, env.mu, env.theta, env.q, ks);
  json rows = json::array();
  for (const auto& r : level.rows) {
    rows.push_back({{"k", num(r.k)}, {"lhs", num(r.lhs)}, {"rhs", num(r.rhs)}, {"pass", r.pass}});
  }
  const bool pass = sup.pass && level.pass;
  json rep;
  rep["schema"] = "aniso.bound.v1";
  rep["energy"] = energy.to_json();
  rep["envelope"] = {{"mu", env.mu}, {"theta", env.theta}, {"q", env.q}};
  rep["dim"] = domain->dim();
  rep["c"] = energy.c();
  rep["measured"] = num(sup.measured);
  rep["bound"] = sup.applicable ? num(sup.bound) : json(nullptr);
  rep["applicable"] = sup.applicable;
  rep["sup_pass"] = sup.pass;
  rep["levelset"] = {{"rows", rows}, {"pass", level.pass}};
  rep["pass"] = pass;
  run.emit("bound.json", dump(rep));
  return pass ? 0 : 1;
}

// --- toy -------------------------------------------------------------------

int cmd_toy(Run& run, int nodes, const std::vector<double>& weights, const std::string& sign) {
  if (weights.size() != 4) throw SchemaError("/weights", "expected 4 comma-separated numbers");
  if (nodes < 3) throw SchemaError("/nodes", "must be >= 3");
  std::array<double, 4> w{weights[0], weights[1], weights[2], weights[3]};
  std::optional<Energy> energy;
  try {
    energy = Energy::orthant_quadratic(w);
  } catch (const Error& e) {
    throw SchemaError("/weights", e.what());
  }
  std::vector<ToySign> signs;
  if (sign == "+" || sign == "both") signs.push_back(ToySign::Plus);
  if (sign == "-" || sign == "both") signs.push_back(ToySign::Minus);
  if (signs.empty()) throw SchemaError("/sign", "expected '+', '-' or 'both'");
  std::ostringstream in;
  in << "toy " << nodes << ' ' << json(weights).dump() << ' ' << sign;
  run.inputs += in.str();

  const ToyProblem problem{nodes, *energy};
  json results = json::object();
  std::optional<double> lp, lm;
  double worst_brute = 0.0;
  for (ToySign s : signs) {
    const auto r = toy_eigen(problem, s);
    const std::string key = s == ToySign::Plus ? "+" : "-";
    (s == ToySign::Plus ? lp : lm) = r.lambda;
    json entry = {{"lambda", num(r.lambda)}, {"u", vec_json(r.u.values())}};
    entry["brute_force"] = r.brute_force ? num(*r.brute_force) : json(nullptr);
    if (r.brute_force) worst_brute = std::max(worst_brute, std::abs(r.lambda - *r.brute_force));
    results[key] = entry;
  }
  const bool brute_pass = worst_brute <= 1e-6;
  json rep;
  rep["schema"] = "aniso.toy.v1";
  rep["nodes"] = nodes;
  rep["energy"] = energy->to_json();
  rep["results"] = results;
  rep["brute_force_agreement"] = {{"max_difference", num(worst_brute)}, {"tol", 1e-6}, {"pass", brute_pass}};
  rep["asymmetric"] = lp && lm ? json(std::abs(*lp - *lm) > 1e-9) : json(nullptr);
  std::optional<std::string> discrepancy;
  if (lp && lm) discrepancy = example_discrepancy(problem, *lp, *lm);
  rep["discrepancy"] = discrepancy ? json(*discrepancy) : json(nullptr);
  rep["pass"] = brute_pass;
  run.emit("toy.json", dump(rep));
  return brute_pass ? 0 : 1;
}

void write_manifest(Run& run, int exit_code, double seconds) {
  json m;
  m["command"] = run.command;
  m["inputs_hash"] = "fnv1a64:" + fnv1a_hex(run.inputs);
  m["seed"] = run.seed;
  m["exit_code"] = exit_code;
  m["versions"] = {{"aniso", ANISO_VERSION},
                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                 std::to_string(EIGEN_MINOR_VERSION)},
                   {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                         std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                         std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                   {"cli11", CLI11_VERSION}};
  m["threads"] = worker_threads();
  m["wall_time_seconds"] = seconds;
  m["outputs"] = run.outputs;
  fs::create_directories(run.out_dir);
  write_file(run.out_dir / "manifest.json", dump(m));
}

}  // namespace

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return to_hex(h);
}

int run(const std::vector<std::string>& args) {
  CLI::App app{"Anisotropic energies: critical points, eigenvalues and verification reports", "aniso"};
  app.require_subcommand(1);
  Run state;
  std::string out_dir = ".";
  std::optional<unsigned long long> seed;
  app.add_option("--out-dir", out_dir, "Directory for reports and fields");
  app.add_option("--seed", seed, "Override the config seed");

  std::string config;
  std::string u_path, v_path;
  int nodes = 3;
  std::vector<double> weights;
  std::string sign = "both";

  auto* solve = app.add_subcommand("solve", "Energy critical point for a reaction (solution CSV + result JSON)");
  solve->add_option("config", config, "Config JSON")->required();
  auto* eig = app.add_subcommand("eigen", "First Dirichlet eigenvalue (free or sign-constrained)");
  eig->add_option("config", config, "Config JSON")->required();
  auto* classify = app.add_subcommand("classify", "Multi-start uniqueness / proportionality classification");
  classify->add_option("config", config, "Config JSON")->required();
  auto* picone = app.add_subcommand("verify-picone", "Picone inequality residuals for two field CSVs");
  picone->add_option("config", config, "Config JSON (domain, energy, u, v)")->required();
  picone->add_option("--u", u_path, "CSV for u (overrides the config)");
  picone->add_option("--v", v_path, "CSV for v (overrides the config)");
  auto* bound = app.add_subcommand("bound-check", "L-infinity bound and level-set inequalities for a solution CSV");
  bound->add_option("config", config, "Config JSON (domain, energy, reaction or envelope, solution)")->required();
  bound->add_option("--solution", u_path, "Solution CSV (overrides the config)");
  auto* toy = app.add_subcommand("toy", "Sign-constrained eigenvalues on a path graph");
  toy->add_option("--nodes", nodes, "Number of nodes (>= 3)");
  toy->add_option("--weights", weights, "Orthant weights a,b,c,d")->delimiter(',')->required();
  toy->add_option("--sign", sign, "'+', '-' or 'both'");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  state.out_dir = out_dir;
  state.seed_override = seed;
  const auto t0 = std::chrono::steady_clock::now();
  int code = 0;
  CLI::App* chosen = app.get_subcommands().front();
  state.command = chosen->get_name();
  try {
    if (chosen == solve) code = cmd_solve(state, config);
    else if (chosen == eig) code = cmd_eigen(state, config);
    else if (chosen == classify) code = cmd_classify(state, config);
    else if (chosen == picone) code = cmd_picone(state, config, u_path, v_path);
    else if (chosen == bound) code = cmd_bound(state, config, u_path);
    else code = cmd_toy(state, nodes, weights, sign);
  } catch (const SchemaError& e) {
    std::cerr << "schema error: " << e.what() << "\n";
    code = 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    try {
      state.emit("error.json", dump({{"command", state.command}, {"error", e.what()}}));
    } catch (const std::exception&) {
    }
    code = 1;
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  try {
    write_manifest(state, code, seconds);
  } catch (const std::exception& e) {
    std::cerr << "cannot write manifest: " << e.what() << "\n";
    if (code == 0) code = 1;
  }
  return code;
}

}  // namespace aniso::cli
