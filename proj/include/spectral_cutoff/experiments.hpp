#pragma once

// Experiment harness behind the command-line tool: JSON configs, parameter
// grids fanned out over worker threads, CSV + JSON result files, and
// re-certification of every row from the recorded witness.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "distances.hpp"
#include "geometry.hpp"
#include "seminorm.hpp"
#include "solver.hpp"
#include "states.hpp"

namespace spectral_cutoff {

inline constexpr const char* kVersion = "0.1.0";

using Json = nlohmann::json;

class ConfigError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Catalog

struct ExperimentInfo {
  std::string name;
  std::string description;
  std::string anchor;
};

inline const std::vector<ExperimentInfo>& experiment_catalog() {
  static const std::vector<ExperimentInfo> catalog = {
      {"fejer-convergence", "bi-truncated circle distance between Fejer states over cut-offs N",
       "Fejer-state distances stay below the arc length and approach it as N grows"},
      {"geodesic-recovery", "full Dirac operator, band-limited symbols, point states",
       "the untruncated circle geometry gives back the arc-length metric"},
      {"divergence-probe", "truncated Dirac operator against the full algebra, growing band limit",
       "with a truncated Dirac operator and the full algebra, point distances are infinite"},
      {"berezin-coherent", "Fock-space truncation of the Berezin plane, coherent-state pairs",
       "coherent states at z and z' sit at distance |z - z'|"},
      {"lipschitz-check", "kernel of the bi-truncated commutator seminorm",
       "the truncated seminorm vanishes exactly on multiples of the identity"},
      {"spectral-action-count", "number of Dirac eigenvalues inside the cut-off window",
       "the spectral action at cut-off Lambda counts Dirac eigenvalues up to Lambda"},
      {"moment1", "first moment of a normal state on a path lattice",
       "metric finiteness of a normal state follows from a finite first moment"},
      {"truncated-state", "lattice distance between a normal state and its truncations",
       "a normal state is the limit of its truncations"},
  };
  return catalog;
}

inline bool is_known_experiment(const std::string& name) {
  const auto& c = experiment_catalog();
  return std::any_of(c.begin(), c.end(), [&](const ExperimentInfo& e) { return e.name == name; });
}

// ---------------------------------------------------------------------------
// Config

struct PointPair {
  double x = 0.0;
  double y = 0.0;
};

struct ComplexPair {
  cplx z;
  cplx zp;
};

struct ExperimentConfig {
  std::string experiment;
  std::vector<int> N;
  std::vector<int> bands;
  std::vector<PointPair> pairs;
  std::vector<ComplexPair> z_pairs;
  std::vector<double> cutoffs;
  std::vector<int> references;
  double theta = 1.0;
  int K = 64;
  double dirac_scale = 1.0;
  int fejer_N = 0;  ///< geodesic-recovery: 0 compares point states, otherwise Fejer-weighted
  std::string geometry = "circle";
  int sites = 64;
  double ratio = 0.75;
  SolveOptions solver;
  std::string output;
  bool deterministic = true;
  int threads = 0;  ///< 0 = hardware concurrency
  Json echo;        ///< the config document as read
};

namespace detail {

/// Angles as numbers or strings such as "pi", "-pi/2", "3pi/4", "0.25*pi".
inline double parse_angle(const Json& j, const std::string& where) {
  if (j.is_number()) return j.get<double>();
  if (!j.is_string()) throw ConfigError(where + ": angle must be a number or a string like \"pi/2\"");
  const std::string s = j.get<std::string>();
  static const std::regex pattern(R"(^\s*([+-]?(?:\d+\.?\d*|\.\d+)?)\s*\*?\s*pi\s*(?:/\s*(\d+\.?\d*))?\s*$)");
  std::smatch m;
  if (std::regex_match(s, m, pattern)) {
    double coef = 1.0;
    const std::string c = m[1].str();
    if (c == "-") coef = -1.0;
    else if (!c.empty() && c != "+") coef = std::stod(c);
    const double den = m[2].matched ? std::stod(m[2].str()) : 1.0;
    if (den == 0.0) throw ConfigError(where + ": zero denominator in angle \"" + s + "\"");
    return coef * std::numbers::pi / den;
  }
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError(where + ": cannot parse angle \"" + s + "\"");
}

inline cplx parse_complex(const Json& j, const std::string& where) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return {j[0].get<double>(), j[1].get<double>()};
  throw ConfigError(where + ": complex number must be a number or [re, im]");
}

template <class T>
std::vector<T> parse_list(const Json& j, const std::string& key,
                          const std::function<T(const Json&, const std::string&)>& item) {
  if (!j.is_array()) throw ConfigError("'" + key + "' must be a list");
  if (j.empty()) throw ConfigError("'" + key + "' must not be empty");
  std::vector<T> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(item(j[i], key + "[" + std::to_string(i) + "]"));
  return out;
}

inline int parse_int(const Json& j, const std::string& where, int lo) {
  if (!j.is_number_integer()) throw ConfigError(where + ": expected an integer");
  const auto v = j.get<long long>();
  if (v < lo || v > std::numeric_limits<int>::max())
    throw ConfigError(where + ": must be at least " + std::to_string(lo));
  return static_cast<int>(v);
}

inline double parse_positive(const Json& j, const std::string& where) {
  if (!j.is_number()) throw ConfigError(where + ": expected a number");
  const double v = j.get<double>();
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(where + ": must be positive and finite");
  return v;
}

/// Keys each experiment requires and the optional ones it accepts.
struct KeySpec {
  std::set<std::string> required;
  std::set<std::string> optional;
};

inline KeySpec experiment_keys(const std::string& name) {
  if (name == "fejer-convergence") return {{"N", "pairs"}, {"dirac_scale"}};
  if (name == "geodesic-recovery") return {{"bands", "pairs"}, {"fejer_N"}};
  if (name == "divergence-probe") return {{"N", "bands", "pairs"}, {}};
  if (name == "berezin-coherent") return {{"K", "z_pairs"}, {"theta"}};
  if (name == "lipschitz-check") return {{"N"}, {}};
  if (name == "spectral-action-count") return {{"cutoffs"}, {"geometry", "N", "K", "theta"}};
  if (name == "moment1") return {{"references"}, {"sites", "ratio"}};
  if (name == "truncated-state") return {{"N"}, {"sites", "ratio"}};
  return {};
}

}  // namespace detail

inline ExperimentConfig parse_config(const Json& doc) {
  using namespace detail;
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  if (!doc.contains("experiment") || !doc["experiment"].is_string())
    throw ConfigError("config needs a string 'experiment'");
  ExperimentConfig cfg;
  cfg.echo = doc;
  cfg.experiment = doc["experiment"].get<std::string>();
  if (!is_known_experiment(cfg.experiment))
    throw ConfigError("unknown experiment '" + cfg.experiment + "' (see 'spectral-cutoff list')");

  const std::set<std::string> common = {"experiment", "tolerances", "output", "deterministic", "threads"};
  const KeySpec keys = experiment_keys(cfg.experiment);
  for (const auto& [key, value] : doc.items()) {
    if (common.count(key) || keys.required.count(key) || keys.optional.count(key)) continue;
    throw ConfigError("unknown key '" + key + "' for experiment '" + cfg.experiment + "'");
  }
  for (const auto& key : keys.required)
    if (!doc.contains(key)) throw ConfigError("experiment '" + cfg.experiment + "' needs '" + key + "'");

  const std::function<int(const Json&, const std::string&)> int1 = [](const Json& j, const std::string& w) {
    return parse_int(j, w, 1);
  };
  const std::function<int(const Json&, const std::string&)> int0 = [](const Json& j, const std::string& w) {
    return parse_int(j, w, 0);
  };
  if (doc.contains("N")) cfg.N = parse_list<int>(doc["N"], "N", int1);
  if (doc.contains("bands")) cfg.bands = parse_list<int>(doc["bands"], "bands", int1);
  if (doc.contains("references")) cfg.references = parse_list<int>(doc["references"], "references", int0);
  if (doc.contains("cutoffs"))
    cfg.cutoffs = parse_list<double>(doc["cutoffs"], "cutoffs", std::function<double(const Json&, const std::string&)>(parse_positive));
  if (doc.contains("pairs")) {
    cfg.pairs = parse_list<PointPair>(doc["pairs"], "pairs", [](const Json& j, const std::string& w) {
      if (!j.is_array() || j.size() != 2) throw ConfigError(w + ": expected [x, y]");
      return PointPair{parse_angle(j[0], w), parse_angle(j[1], w)};
    });
  }
  if (doc.contains("z_pairs")) {
    cfg.z_pairs = parse_list<ComplexPair>(doc["z_pairs"], "z_pairs", [](const Json& j, const std::string& w) {
      if (!j.is_array() || j.size() != 2) throw ConfigError(w + ": expected [z, z']");
      return ComplexPair{parse_complex(j[0], w), parse_complex(j[1], w)};
    });
  }
  if (doc.contains("theta")) cfg.theta = parse_positive(doc["theta"], "theta");
  if (doc.contains("K")) cfg.K = parse_int(doc["K"], "K", 2);
  if (doc.contains("dirac_scale")) {
    if (!doc["dirac_scale"].is_number() || doc["dirac_scale"].get<double>() == 0.0 ||
        !std::isfinite(doc["dirac_scale"].get<double>()))
      throw ConfigError("dirac_scale: must be a finite nonzero number");
    cfg.dirac_scale = doc["dirac_scale"].get<double>();
  }
  if (doc.contains("fejer_N")) cfg.fejer_N = parse_int(doc["fejer_N"], "fejer_N", 1);
  if (doc.contains("sites")) cfg.sites = parse_int(doc["sites"], "sites", 2);
  if (doc.contains("ratio")) {
    cfg.ratio = parse_positive(doc["ratio"], "ratio");
    if (!(cfg.ratio < 1.0)) throw ConfigError("ratio: must lie in (0, 1)");
  }
  if (doc.contains("geometry")) {
    if (!doc["geometry"].is_string()) throw ConfigError("geometry: expected \"circle\" or \"berezin\"");
    cfg.geometry = doc["geometry"].get<std::string>();
    if (cfg.geometry != "circle" && cfg.geometry != "berezin")
      throw ConfigError("geometry: expected \"circle\" or \"berezin\"");
  }
  if (doc.contains("tolerances")) {
    const Json& t = doc["tolerances"];
    if (!t.is_object()) throw ConfigError("tolerances: expected an object");
    for (const auto& [key, value] : t.items()) {
      if (key == "gap_rel") cfg.solver.gap_rel = parse_positive(value, "tolerances.gap_rel");
      else if (key == "gap_abs") cfg.solver.gap_abs = parse_positive(value, "tolerances.gap_abs");
      else if (key == "value_cap") cfg.solver.value_cap = parse_positive(value, "tolerances.value_cap");
      else if (key == "max_iterations") cfg.solver.max_iterations = parse_int(value, "tolerances.max_iterations", 1);
      else throw ConfigError("unknown key 'tolerances." + key + "'");
    }
  }
  if (doc.contains("output")) {
    if (!doc["output"].is_string() || doc["output"].get<std::string>().empty())
      throw ConfigError("output: expected a nonempty path");
    cfg.output = doc["output"].get<std::string>();
  } else {
    cfg.output = "results/" + cfg.experiment;
  }
  if (doc.contains("deterministic")) {
    if (!doc["deterministic"].is_boolean()) throw ConfigError("deterministic: expected true or false");
    cfg.deterministic = doc["deterministic"].get<bool>();
  }
  if (doc.contains("threads")) cfg.threads = parse_int(doc["threads"], "threads", 1);

  // Cross-field checks.
  if (cfg.experiment == "divergence-probe") {
    for (std::size_t i = 1; i < cfg.bands.size(); ++i)
      if (cfg.bands[i] <= cfg.bands[i - 1]) throw ConfigError("bands: must be strictly increasing");
  }
  if (cfg.experiment == "berezin-coherent") {
    for (std::size_t i = 0; i < cfg.z_pairs.size(); ++i) {
      try {
        check_coherent_window(cfg.theta, cfg.K, cfg.z_pairs[i].z);
        check_coherent_window(cfg.theta, cfg.K, cfg.z_pairs[i].zp);
      } catch (const InvalidArgument& e) {
        throw ConfigError("z_pairs[" + std::to_string(i) + "]: " + e.what());
      }
    }
  }
  if (cfg.experiment == "spectral-action-count") {
    if (cfg.geometry == "circle" && cfg.N.empty()) throw ConfigError("circle spectral-action-count needs 'N'");
    if (cfg.geometry == "circle" && (doc.contains("K") || doc.contains("theta")))
      throw ConfigError("'K' and 'theta' apply to the berezin geometry only");
    if (cfg.geometry == "berezin" && doc.contains("N"))
      throw ConfigError("'N' applies to the circle geometry only");
  }
  if (cfg.experiment == "moment1") {
    for (int r : cfg.references)
      if (r >= cfg.sites) throw ConfigError("references: index beyond the number of sites");
  }
  if (cfg.experiment == "truncated-state") {
    for (int n : cfg.N)
      if (n > cfg.sites) throw ConfigError("N: truncation rank beyond the number of sites");
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_config(doc);
}

// ---------------------------------------------------------------------------
// Rows

/// Shortest round-trip decimal; "inf" for +infinity, "nan" for failed rows.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

struct ResultRow {
  std::string experiment;
  std::vector<std::pair<std::string, std::string>> params;  ///< CSV column -> cell
  Json param_values = Json::object();                       ///< same, typed
  double value = std::numeric_limits<double>::quiet_NaN();  ///< +inf for kernel certificates
  std::string status;
  double gap = 0.0;
  double feas_residual = 0.0;
  int iterations = 0;
  double wall_time_ms = 0.0;
  Json problem;  ///< recipe to rebuild the problem for certification
  RealVector witness;
  std::string message;
};

namespace detail {

inline Json value_json(double v) {
  if (std::isinf(v)) return "inf";
  if (std::isnan(v)) return nullptr;
  return v;
}

inline double value_from_json(const Json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (j.is_string() && j.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
  return j.get<double>();
}

inline Json complex_json(cplx z) { return Json::array({z.real(), z.imag()}); }
inline cplx complex_from_json(const Json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

inline void add_param(ResultRow& row, const std::string& key, const Json& value) {
  std::string cell;
  if (value.is_number_integer()) cell = std::to_string(value.get<long long>());
  else if (value.is_number()) cell = format_number(value.get<double>());
  else if (value.is_string()) cell = value.get<std::string>();
  row.params.emplace_back(key, cell);
  row.param_values[key] = value;
}

inline void fill_from_distance(ResultRow& row, const DistanceResult& d) {
  row.value = d.value.to_double();
  row.status = to_string(d.status);
  row.gap = d.gap;
  row.feas_residual = d.feas_residual;
  row.iterations = d.iterations;
  row.witness = d.witness;
}

}  // namespace detail

/// Rebuilds the optimization problem a row was solved on.
inline ConvexProblem rebuild_problem(const Json& recipe) {
  const std::string kind = recipe.at("kind").get<std::string>();
  if (kind == "bi") {
    const auto geom = build_circle(recipe.at("N").get<int>(), recipe.at("dirac_scale").get<double>());
    return bi_problem(geom, fejer_state(recipe.at("x").get<double>(), geom.N),
                      fejer_state(recipe.at("y").get<double>(), geom.N));
  }
  if (kind == "full_flat") {
    const int fejer_N = recipe.at("fejer_N").get<int>();
    return full_flat_problem(recipe.at("x").get<double>(), recipe.at("y").get<double>(),
                             recipe.at("band").get<int>(),
                             fejer_N > 0 ? FlatFunctionals::fejer(fejer_N) : FlatFunctionals::points());
  }
  if (kind == "truncated_flat") {
    return truncated_flat_problem(build_circle(recipe.at("N").get<int>()), recipe.at("x").get<double>(),
                                  recipe.at("y").get<double>(), recipe.at("band").get<int>());
  }
  if (kind == "berezin") {
    return berezin_problem(recipe.at("theta").get<double>(), recipe.at("K").get<int>(),
                           detail::complex_from_json(recipe.at("z")), detail::complex_from_json(recipe.at("zp")));
  }
  if (kind == "lattice") {
    const DensityState phi = geometric_state(recipe.at("sites").get<int>(), recipe.at("ratio").get<double>());
    return lattice_problem(phi, leading_truncation(phi, recipe.at("rank").get<int>()));
  }
  throw InvalidArgument("no optimization problem for recipe kind '" + kind + "'");
}

/// Value of a row without an optimization witness, recomputed from scratch.
inline double recompute_direct(const Json& recipe) {
  const std::string kind = recipe.at("kind").get<std::string>();
  if (kind == "lipschitz") {
    const auto geom = build_circle(recipe.at("N").get<int>());
    return double(lipschitz_check(toeplitz_basis(geom, true), circle_commutator_map(geom)).kernel.size());
  }
  if (kind == "spectral_action") {
    const double cutoff = recipe.at("cutoff").get<double>();
    std::vector<double> spectrum;
    if (recipe.at("geometry").get<std::string>() == "circle")
      spectrum = circle_dirac_spectrum(build_circle(recipe.at("N").get<int>()));
    else
      spectrum = berezin_dirac_spectrum(build_berezin(recipe.at("theta").get<double>(), recipe.at("K").get<int>()));
    return double(spectral_action_count(spectrum, cutoff));
  }
  if (kind == "moment1") {
    const int sites = recipe.at("sites").get<int>();
    const DensityState rho = geometric_state(sites, recipe.at("ratio").get<double>());
    RealVector w(sites);
    for (int n = 0; n < sites; ++n) w(n) = rho.rho()(n, n).real();
    const NormalStateSpec spec(rho, ComplexMatrix::Identity(sites, sites), w);
    return moment1(spec, lattice_distance_table(sites), recipe.at("reference").get<int>()).to_double();
  }
  throw InvalidArgument("no direct recomputation for recipe kind '" + kind + "'");
}

struct RowCertification {
  bool ok = false;
  double objective = 0.0;
  double feas_residual = 0.0;
  std::string message;
};

inline constexpr double kCertifyValueTol = 1e-9;
inline constexpr double kCertifyFeasTol = 1e-7;

/// Independent check of one recorded row: rebuild the problem, re-evaluate the
/// witness, and compare with the recorded value.
inline RowCertification certify_row(const Json& recipe, double value, const RealVector& witness) {
  RowCertification out;
  if (std::isnan(value)) {
    out.message = "row has no value";
    return out;
  }
  try {
    const std::string kind = recipe.at("kind").get<std::string>();
    if (kind == "lipschitz" || kind == "spectral_action" || kind == "moment1") {
      out.objective = recompute_direct(recipe);
      out.ok = std::abs(out.objective - value) <= kCertifyValueTol * std::max(1.0, std::abs(value));
      if (!out.ok) out.message = "recomputed value " + format_number(out.objective) + " differs";
      return out;
    }
    const ConvexProblem problem = rebuild_problem(recipe);
    if (static_cast<std::size_t>(witness.size()) != problem.size()) {
      out.message = "witness has the wrong length";
      return out;
    }
    if (std::isinf(value)) {
      // Kernel certificate: K(w) = 0 with a positive objective slope.
      const double image = op_norm(problem.constraint_at(witness));
      out.objective = problem.objective.dot(witness);
      out.feas_residual = image;
      out.ok = out.objective > 0.0 && image <= kNullspaceThreshold * std::max(1.0, witness.norm());
      if (!out.ok) out.message = "witness is not a kernel direction with positive slope";
      return out;
    }
    const Certificate cert = certify(problem, witness);
    out.objective = cert.objective;
    out.feas_residual = cert.feas_residual;
    const bool value_ok = std::abs(cert.objective - value) <= kCertifyValueTol * std::max(1.0, std::abs(value));
    const bool feas_ok = cert.feas_residual <= kCertifyFeasTol;
    out.ok = value_ok && feas_ok;
    if (!value_ok) out.message = "witness objective " + format_number(cert.objective) + " differs from value";
    else if (!feas_ok) out.message = "witness violates the constraint by " + format_number(cert.feas_residual);
  } catch (const std::exception& e) {
    out.message = e.what();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Grid expansion

/// One grid point: `params` fills the parameter columns and the problem
/// recipe, `compute` fills the result fields.
struct RowTask {
  std::function<void(ResultRow&)> params;
  std::function<void(ResultRow&)> compute;
};

namespace detail {

inline RowTask distance_task(std::function<void(ResultRow&)> params, std::function<DistanceResult()> solve) {
  return {std::move(params), [solve = std::move(solve)](ResultRow& r) { fill_from_distance(r, solve()); }};
}

inline RowTask direct_task(std::function<void(ResultRow&)> params) {
  return {std::move(params), [](ResultRow& r) {
            r.value = recompute_direct(r.problem);
            if (r.problem.at("kind").get<std::string>() == "lipschitz")
              r.status = r.value == 1.0 ? "lipschitz" : "not_lipschitz";
            else
              r.status = std::isinf(r.value) ? "infinite" : "exact";
          }};
}

inline std::vector<RowTask> expand_tasks(const ExperimentConfig& cfg) {
  std::vector<RowTask> tasks;
  const std::string& ex = cfg.experiment;
  const SolveOptions opts = cfg.solver;

  if (ex == "fejer-convergence") {
    const double scale = cfg.dirac_scale;
    for (const auto& pr : cfg.pairs)
      for (int N : cfg.N)
        tasks.push_back(distance_task(
            [=](ResultRow& r) {
              add_param(r, "N", N);
              add_param(r, "x", pr.x);
              add_param(r, "y", pr.y);
              add_param(r, "dirac_scale", scale);
              r.problem = {{"kind", "bi"}, {"N", N}, {"x", pr.x}, {"y", pr.y}, {"dirac_scale", scale}};
            },
            [=] {
              const auto geom = build_circle(N, scale);
              return distance_bi(geom, fejer_state(pr.x, N), fejer_state(pr.y, N), opts);
            }));
  } else if (ex == "geodesic-recovery") {
    const int fejer_N = cfg.fejer_N;
    const FlatFunctionals fn = fejer_N > 0 ? FlatFunctionals::fejer(fejer_N) : FlatFunctionals::points();
    for (const auto& pr : cfg.pairs)
      for (int band : cfg.bands)
        tasks.push_back(distance_task(
            [=](ResultRow& r) {
              add_param(r, "band", band);
              add_param(r, "x", pr.x);
              add_param(r, "y", pr.y);
              add_param(r, "fejer_N", fejer_N);
              r.problem = {{"kind", "full_flat"}, {"band", band}, {"x", pr.x}, {"y", pr.y}, {"fejer_N", fejer_N}};
            },
            [=] { return distance_full_flat(PointFunctional(pr.x), PointFunctional(pr.y), band, opts, fn); }));
  } else if (ex == "divergence-probe") {
    for (const auto& pr : cfg.pairs)
      for (int N : cfg.N)
        for (int band : cfg.bands)
          tasks.push_back(distance_task(
              [=](ResultRow& r) {
                add_param(r, "N", N);
                add_param(r, "band", band);
                add_param(r, "x", pr.x);
                add_param(r, "y", pr.y);
                r.problem = {{"kind", "truncated_flat"}, {"N", N}, {"band", band}, {"x", pr.x}, {"y", pr.y}};
              },
              [=] {
                return distance_truncated_flat(build_circle(N), PointFunctional(pr.x), PointFunctional(pr.y),
                                               band, opts);
              }));
  } else if (ex == "berezin-coherent") {
    const double theta = cfg.theta;
    const int K = cfg.K;
    for (const auto& zp : cfg.z_pairs)
      tasks.push_back(distance_task(
          [=](ResultRow& r) {
            add_param(r, "theta", theta);
            add_param(r, "K", K);
            add_param(r, "z_re", zp.z.real());
            add_param(r, "z_im", zp.z.imag());
            add_param(r, "zp_re", zp.zp.real());
            add_param(r, "zp_im", zp.zp.imag());
            r.problem = {{"kind", "berezin"}, {"theta", theta}, {"K", K},
                         {"z", complex_json(zp.z)}, {"zp", complex_json(zp.zp)}};
          },
          [=] { return distance_berezin_coherent(theta, K, zp.z, zp.zp, opts); }));
  } else if (ex == "truncated-state") {
    const int sites = cfg.sites;
    const double ratio = cfg.ratio;
    for (int rank : cfg.N)
      tasks.push_back(distance_task(
          [=](ResultRow& r) {
            add_param(r, "sites", sites);
            add_param(r, "ratio", ratio);
            add_param(r, "N", rank);
            r.problem = {{"kind", "lattice"}, {"sites", sites}, {"ratio", ratio}, {"rank", rank}};
          },
          [=] {
            const DensityState phi = geometric_state(sites, ratio);
            return distance_lattice(phi, leading_truncation(phi, rank), opts);
          }));
  } else if (ex == "lipschitz-check") {
    for (int N : cfg.N)
      tasks.push_back(direct_task([=](ResultRow& r) {
        add_param(r, "N", N);
        r.problem = {{"kind", "lipschitz"}, {"N", N}};
      }));
  } else if (ex == "spectral-action-count") {
    const bool circle = cfg.geometry == "circle";
    const std::string geometry = cfg.geometry;
    const double theta = cfg.theta;
    const std::vector<int> sizes = circle ? cfg.N : std::vector<int>{cfg.K};
    for (int size : sizes)
      for (double cutoff : cfg.cutoffs)
        tasks.push_back(direct_task([=](ResultRow& r) {
          add_param(r, "geometry", geometry);
          add_param(r, circle ? "N" : "K", size);
          if (!circle) add_param(r, "theta", theta);
          add_param(r, "cutoff", cutoff);
          r.problem = {{"kind", "spectral_action"}, {"geometry", geometry}, {"cutoff", cutoff}};
          if (circle) {
            r.problem["N"] = size;
          } else {
            r.problem["K"] = size;
            r.problem["theta"] = theta;
          }
        }));
  } else if (ex == "moment1") {
    const int sites = cfg.sites;
    const double ratio = cfg.ratio;
    for (int ref : cfg.references)
      tasks.push_back(direct_task([=](ResultRow& r) {
        add_param(r, "sites", sites);
        add_param(r, "ratio", ratio);
        add_param(r, "reference", ref);
        r.problem = {{"kind", "moment1"}, {"sites", sites}, {"ratio", ratio}, {"reference", ref}};
      }));
  }
  return tasks;
}

}  // namespace detail

/// Runs every grid point; rows come back in grid order when the config asks
/// for determinism, in completion order otherwise.
inline std::vector<ResultRow> run_rows(const ExperimentConfig& cfg) {
  const std::vector<RowTask> tasks = detail::expand_tasks(cfg);
  std::vector<ResultRow> rows(tasks.size());
  std::vector<std::size_t> completion;
  std::mutex collector;
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      const auto start = std::chrono::steady_clock::now();
      ResultRow row;
      row.experiment = cfg.experiment;
      tasks[i].params(row);
      try {
        tasks[i].compute(row);
      } catch (const std::exception& e) {
        row.status = "error";
        row.message = e.what();
        row.value = std::numeric_limits<double>::quiet_NaN();
      }
      row.wall_time_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      std::lock_guard<std::mutex> lock(collector);
      rows[i] = std::move(row);
      completion.push_back(i);
    }
  };

  unsigned n_threads = cfg.threads > 0 ? static_cast<unsigned>(cfg.threads)
                                       : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min<unsigned>(n_threads, static_cast<unsigned>(std::max<std::size_t>(1, tasks.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  if (cfg.deterministic) return rows;
  std::vector<ResultRow> ordered;
  for (std::size_t i : completion) ordered.push_back(std::move(rows[i]));
  return ordered;
}

/// Re-certifies each row in place; failed rows get status "certification_failed".
inline std::size_t recertify_rows(std::vector<ResultRow>& rows) {
  std::size_t failures = 0;
  for (auto& row : rows) {
    if (row.status == "error") {
      ++failures;
      continue;
    }
    const RowCertification c = certify_row(row.problem, row.value, row.witness);
    if (!c.ok) {
      ++failures;
      row.message = "certification failed: " + c.message;
      row.status = "certification_failed";
    }
  }
  return failures;
}

// ---------------------------------------------------------------------------
// Output

struct OutputPaths {
  std::filesystem::path csv;
  std::filesystem::path json;
};

/// `output` is a path stem; SPECTRAL_CUTOFF_OUT, when set, replaces its directory.
inline OutputPaths resolve_output(const std::string& output) {
  std::filesystem::path stem(output);
  if (stem.extension() == ".csv" || stem.extension() == ".json") stem.replace_extension();
  if (const char* dir = std::getenv("SPECTRAL_CUTOFF_OUT"); dir != nullptr && *dir != '\0')
    stem = std::filesystem::path(dir) / stem.filename();
  OutputPaths p;
  p.csv = stem;
  p.csv += ".csv";
  p.json = stem;
  p.json += ".json";
  return p;
}

inline std::vector<std::string> csv_header(const std::vector<ResultRow>& rows) {
  std::vector<std::string> header{"experiment"};
  if (!rows.empty())
    for (const auto& [key, cell] : rows.front().params) header.push_back(key);
  for (const char* c : {"value", "status", "gap", "feas_residual", "wall_time_ms"}) header.emplace_back(c);
  return header;
}

inline std::string to_csv(const std::vector<ResultRow>& rows) {
  std::ostringstream out;
  const auto header = csv_header(rows);
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& row : rows) {
    out << row.experiment;
    for (const auto& [key, cell] : row.params) out << ',' << cell;
    out << ',' << format_number(row.value) << ',' << row.status << ',' << format_number(row.gap) << ','
        << format_number(row.feas_residual) << ',' << format_number(std::round(row.wall_time_ms * 1000.0) / 1000.0)
        << '\n';
  }
  return out.str();
}

inline Json to_metadata(const ExperimentConfig& cfg, const std::vector<ResultRow>& rows) {
  Json doc;
  doc["library"] = "spectral-cutoff";
  doc["version"] = kVersion;
  doc["config"] = cfg.echo;
  doc["columns"] = csv_header(rows);
  Json jrows = Json::array();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const ResultRow& r = rows[i];
    Json j;
    j["index"] = i;
    j["experiment"] = r.experiment;
    j["params"] = r.param_values;
    j["value"] = detail::value_json(r.value);
    j["status"] = r.status;
    j["gap"] = r.gap;
    j["feas_residual"] = r.feas_residual;
    j["iterations"] = r.iterations;
    j["problem"] = r.problem;
    j["witness"] = std::vector<double>(r.witness.data(), r.witness.data() + r.witness.size());
    if (!r.message.empty()) j["message"] = r.message;
    jrows.push_back(std::move(j));
  }
  doc["rows"] = std::move(jrows);
  return doc;
}

struct RunSummary {
  OutputPaths paths;
  std::vector<ResultRow> rows;
  std::size_t failures = 0;
};

inline RunSummary run_experiment(const ExperimentConfig& cfg) {
  RunSummary s;
  s.rows = run_rows(cfg);
  s.failures = recertify_rows(s.rows);
  s.paths = resolve_output(cfg.output);
  if (s.paths.csv.has_parent_path()) std::filesystem::create_directories(s.paths.csv.parent_path());
  std::ofstream csv(s.paths.csv, std::ios::binary);
  std::ofstream json(s.paths.json, std::ios::binary);
  if (!csv || !json) throw Error("cannot write results next to '" + s.paths.csv.string() + "'");
  csv << to_csv(s.rows);
  json << to_metadata(cfg, s.rows).dump(2) << '\n';
  return s;
}

// ---------------------------------------------------------------------------
// Certification of written results

struct FileCertification {
  std::size_t rows = 0;
  std::vector<std::string> failures;
  bool ok() const { return failures.empty(); }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline double parse_value_cell(const std::string& cell) {
  if (cell == "inf") return std::numeric_limits<double>::infinity();
  if (cell == "nan") return std::numeric_limits<double>::quiet_NaN();
  std::size_t used = 0;
  const double v = std::stod(cell, &used);
  if (used != cell.size()) throw std::invalid_argument("trailing characters");
  return v;
}

}  // namespace detail

/// Reads a results CSV and its adjacent JSON, then re-certifies every row.
inline FileCertification certify_results(const std::filesystem::path& csv_path) {
  std::ifstream csv(csv_path);
  if (!csv) throw ConfigError("cannot open '" + csv_path.string() + "'");
  std::filesystem::path json_path = csv_path;
  json_path.replace_extension(".json");
  std::ifstream jin(json_path);
  if (!jin) throw ConfigError("missing metadata file '" + json_path.string() + "'");
  Json meta;
  try {
    meta = Json::parse(jin);
  } catch (const Json::parse_error& e) {
    throw ConfigError("metadata '" + json_path.string() + "' is not valid JSON: " + e.what());
  }
  if (!meta.contains("rows") || !meta["rows"].is_array())
    throw ConfigError("metadata '" + json_path.string() + "' has no rows");

  FileCertification result;
  std::string line;
  if (!std::getline(csv, line)) throw ConfigError("empty results file '" + csv_path.string() + "'");
  const auto header = detail::split_csv_line(line);
  const auto value_col = std::find(header.begin(), header.end(), "value") - header.begin();
  if (value_col == static_cast<std::ptrdiff_t>(header.size()))
    throw ConfigError("results file has no 'value' column");

  const Json& jrows = meta["rows"];
  std::size_t i = 0;
  for (; std::getline(csv, line); ++i) {
    if (line.empty()) continue;
    const std::string label = "row " + std::to_string(i);
    if (i >= jrows.size()) {
      result.failures.push_back(label + ": no metadata entry");
      continue;
    }
    const auto cells = detail::split_csv_line(line);
    double value = 0.0;
    try {
      value = detail::parse_value_cell(cells.at(static_cast<std::size_t>(value_col)));
    } catch (const std::exception&) {
      result.failures.push_back(label + ": value cell is not a number or inf");
      continue;
    }
    const Json& jr = jrows[i];
    const double recorded = detail::value_from_json(jr.at("value"));
    if (!(value == recorded) && !(std::isnan(value) && std::isnan(recorded))) {
      result.failures.push_back(label + ": CSV and metadata values differ");
      continue;
    }
    const auto w = jr.at("witness").get<std::vector<double>>();
    const RealVector witness = Eigen::Map<const RealVector>(w.data(), static_cast<Eigen::Index>(w.size()));
    const RowCertification c = certify_row(jr.at("problem"), value, witness);
    if (!c.ok) result.failures.push_back(label + ": " + c.message);
  }
  result.rows = i;
  if (i != jrows.size()) result.failures.push_back("CSV and metadata row counts differ");
  return result;
}

}  // namespace spectral_cutoff
