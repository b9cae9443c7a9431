#pragma once
// Run configuration: strict JSON ingestion validated against the owning
// modules' preconditions, with an effective-config echo so every run is
// reproducible from its output directory alone.

#include <seqtunnel/conformal.hpp>
#include <seqtunnel/geometry.hpp>
#include <seqtunnel/verify.hpp>

#include <json.hpp>

#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace seqtunnel::config {

using Json = nlohmann::json;

inline constexpr const char* kBuiltinStages = "benchmark-4stage";

struct OutputOptions {
  std::string directory = "out";
  bool cavity_profile = true;
  bool ground_profile = true;
  bool coefficients = true;
  int cavity_points = 2048;
  int ground_points = 481;

  void validate() const {
    if (directory.empty()) throw ConfigError("outputs.directory must not be empty");
    if (cavity_points < 8) throw ConfigError("outputs.cavity_points must be >= 8");
    if (ground_points < 8) throw ConfigError("outputs.ground_points must be >= 8");
  }
};

struct SweepSpec {
  std::string kind;  // "corner" | "kx" | "x0"
  int stage_index = 3;
  std::vector<double> values;
};

struct RunConfig {
  geometry::Material material{20.0, 0.8, 20000.0, 0.3};
  double x0 = 10.0;
  conformal::MappingParams mapping;
  geometry::DensitySpec density;
  verify::SolverOptions solver;
  verify::Thresholds thresholds;
  OutputOptions outputs;
  std::optional<SweepSpec> sweep;
  std::vector<geometry::StageBoundary> stages;
  Json stages_echo;  // normalized stage specification for the echo

  Json effective() const;
};

namespace detail {

inline const Json& expect_object(const Json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  return j;
}

inline void check_keys(const Json& j, const std::string& path,
                       std::initializer_list<const char*> allowed) {
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* k : allowed)
      if (item.key() == k) {
        ok = true;
        break;
      }
    if (!ok) throw ConfigError(path + ": unknown key \"" + item.key() + "\"");
  }
}

inline double get_double(const Json& j, const std::string& path, const char* key) {
  if (!j.contains(key)) throw ConfigError(path + ": missing key \"" + key + "\"");
  const Json& v = j.at(key);
  if (!v.is_number()) throw ConfigError(path + "." + key + ": expected a number");
  return v.get<double>();
}

inline double get_double_or(const Json& j, const std::string& path, const char* key,
                            double fallback) {
  return j.contains(key) ? get_double(j, path, key) : fallback;
}

inline int get_int(const Json& j, const std::string& path, const char* key) {
  if (!j.contains(key)) throw ConfigError(path + ": missing key \"" + key + "\"");
  const Json& v = j.at(key);
  if (!v.is_number_integer()) throw ConfigError(path + "." + key + ": expected an integer");
  return v.get<int>();
}

inline int get_int_or(const Json& j, const std::string& path, const char* key, int fallback) {
  return j.contains(key) ? get_int(j, path, key) : fallback;
}

inline bool get_bool_or(const Json& j, const std::string& path, const char* key, bool fallback) {
  if (!j.contains(key)) return fallback;
  const Json& v = j.at(key);
  if (!v.is_boolean()) throw ConfigError(path + "." + key + ": expected a boolean");
  return v.get<bool>();
}

inline std::string get_string(const Json& j, const std::string& path, const char* key) {
  if (!j.contains(key)) throw ConfigError(path + ": missing key \"" + key + "\"");
  const Json& v = j.at(key);
  if (!v.is_string()) throw ConfigError(path + "." + key + ": expected a string");
  return v.get<std::string>();
}

inline Complex get_complex(const Json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    throw ConfigError(path + ": expected [re, im]");
  return Complex(v[0].get<double>(), v[1].get<double>());
}

inline std::vector<double> get_double_list(const Json& j, const std::string& path,
                                           const char* key) {
  if (!j.contains(key)) throw ConfigError(path + ": missing key \"" + key + "\"");
  const Json& v = j.at(key);
  if (!v.is_array()) throw ConfigError(path + "." + key + ": expected an array of numbers");
  std::vector<double> out;
  for (const Json& e : v) {
    if (!e.is_number()) throw ConfigError(path + "." + key + ": expected an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

inline Complex get_vertex(const Json& v, const std::string& path) { return get_complex(v, path); }

// Geometry failures while ingesting a stage spec are configuration errors.
template <typename F>
geometry::StageBoundary build_or_config_error(const std::string& path, F&& build) {
  try {
    return build();
  } catch (const SolveError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

inline geometry::StageBoundary parse_stage(const Json& j, const std::string& path,
                                           const geometry::DensitySpec& density) {
  expect_object(j, path);
  if (j.contains("builtin_stage")) {
    check_keys(j, path, {"builtin_stage", "fillet_radius"});
    const int n = get_int(j, path, "builtin_stage");
    const double r = get_double_or(j, path, "fillet_radius", 0.5);
    return build_or_config_error(path,
                                 [&] { return geometry::benchmark_stage(n, r, density); });
  }
  if (j.contains("polygon")) {
    check_keys(j, path, {"stage_index", "polygon", "fillet_radii"});
    const int idx = get_int(j, path, "stage_index");
    const Json& poly = j.at("polygon");
    if (!poly.is_array() || poly.size() < 3)
      throw ConfigError(path + ".polygon: expected at least 3 [x, y] vertices");
    std::vector<geometry::BoundarySegment> segs;
    for (std::size_t i = 0; i < poly.size(); ++i) {
      const Complex a = get_vertex(poly[i], path + ".polygon");
      const Complex b = get_vertex(poly[(i + 1) % poly.size()], path + ".polygon");
      segs.push_back(geometry::LineSeg{a, b});
    }
    std::vector<double> radii;
    if (j.contains("fillet_radii")) radii = get_double_list(j, path, "fillet_radii");
    return build_or_config_error(path, [&] {
      return geometry::fillet_corners(idx, std::move(segs), std::move(radii), density);
    });
  }
  if (j.contains("segments")) {
    check_keys(j, path, {"stage_index", "segments"});
    const int idx = get_int(j, path, "stage_index");
    const Json& list = j.at("segments");
    if (!list.is_array() || list.empty())
      throw ConfigError(path + ".segments: expected a non-empty array");
    std::vector<geometry::BoundarySegment> segs;
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string sp = path + ".segments[" + std::to_string(i) + "]";
      const Json& s = expect_object(list[i], sp);
      if (s.contains("line")) {
        check_keys(s, sp, {"line"});
        const Json& l = s.at("line");
        if (!l.is_array() || l.size() != 2)
          throw ConfigError(sp + ".line: expected [[x0, y0], [x1, y1]]");
        segs.push_back(geometry::LineSeg{get_vertex(l[0], sp), get_vertex(l[1], sp)});
      } else if (s.contains("arc")) {
        check_keys(s, sp, {"arc"});
        const Json& a = expect_object(s.at("arc"), sp + ".arc");
        check_keys(a, sp + ".arc", {"center", "radius", "start_angle", "sweep"});
        geometry::ArcSeg arc;
        arc.center = get_complex(a.at("center"), sp + ".arc.center");
        arc.radius = get_double(a, sp + ".arc", "radius");
        arc.start_angle = get_double(a, sp + ".arc", "start_angle");
        arc.sweep = get_double(a, sp + ".arc", "sweep");
        segs.push_back(arc);
      } else {
        throw ConfigError(sp + ": expected \"line\" or \"arc\"");
      }
    }
    return build_or_config_error(
        path, [&] { return geometry::build_boundary(idx, std::move(segs), density); });
  }
  throw ConfigError(path + ": expected \"builtin_stage\", \"polygon\", or \"segments\"");
}

}  // namespace detail

inline RunConfig parse(const Json& root) {
  using namespace detail;
  expect_object(root, "config");
  check_keys(root, "config",
             {"material", "ground", "mapping", "solver", "stages", "outputs", "thresholds",
              "sweep"});
  RunConfig cfg;

  if (!root.contains("material")) throw ConfigError("config: missing block \"material\"");
  {
    const Json& m = expect_object(root.at("material"), "material");
    check_keys(m, "material", {"gamma", "kx", "E", "nu"});
    cfg.material.gamma = get_double(m, "material", "gamma");
    cfg.material.kx = get_double(m, "material", "kx");
    cfg.material.E = get_double(m, "material", "E");
    cfg.material.nu = get_double(m, "material", "nu");
    cfg.material.validate();
  }

  if (!root.contains("ground")) throw ConfigError("config: missing block \"ground\"");
  {
    const Json& g = expect_object(root.at("ground"), "ground");
    check_keys(g, "ground", {"x0"});
    cfg.x0 = get_double(g, "ground", "x0");
    if (!(cfg.x0 > 0.0)) throw ConfigError("ground.x0 must be > 0");
  }

  if (root.contains("mapping")) {
    const Json& mp = expect_object(root.at("mapping"), "mapping");
    check_keys(mp, "mapping",
               {"beta", "z_c", "w_c", "w0_factor", "factor_ext", "factor_int",
                "backward_factor_ext", "backward_factor_int", "exterior_points", "densities"});
    cfg.mapping.beta = get_double_or(mp, "mapping", "beta", cfg.mapping.beta);
    if (!(cfg.mapping.beta > 0.0)) throw ConfigError("mapping.beta must be > 0");
    if (mp.contains("z_c") && !mp.at("z_c").is_null())
      cfg.mapping.z_c = get_complex(mp.at("z_c"), "mapping.z_c");
    if (mp.contains("w_c") && !mp.at("w_c").is_null())
      cfg.mapping.w_c = get_complex(mp.at("w_c"), "mapping.w_c");
    cfg.mapping.w0_factor = get_double_or(mp, "mapping", "w0_factor", cfg.mapping.w0_factor);
    if (!(cfg.mapping.w0_factor > 0.0 && cfg.mapping.w0_factor < 1.0))
      throw ConfigError("mapping.w0_factor must lie in (0, 1)");
    cfg.mapping.factor_ext = get_double_or(mp, "mapping", "factor_ext", cfg.mapping.factor_ext);
    cfg.mapping.factor_int = get_double_or(mp, "mapping", "factor_int", cfg.mapping.factor_int);
    cfg.mapping.backward_factor_ext =
        get_double_or(mp, "mapping", "backward_factor_ext", cfg.mapping.backward_factor_ext);
    cfg.mapping.backward_factor_int =
        get_double_or(mp, "mapping", "backward_factor_int", cfg.mapping.backward_factor_int);
    if (!(cfg.mapping.factor_ext > 0.0 && cfg.mapping.factor_int > 0.0 &&
          cfg.mapping.backward_factor_ext > 0.0 && cfg.mapping.backward_factor_int > 0.0))
      throw ConfigError("mapping assignment factors must be > 0");
    cfg.mapping.exterior_points =
        get_int_or(mp, "mapping", "exterior_points", cfg.mapping.exterior_points);
    if (cfg.mapping.exterior_points < 16)
      throw ConfigError("mapping.exterior_points must be >= 16");
    if (mp.contains("densities")) {
      const Json& d = expect_object(mp.at("densities"), "mapping.densities");
      check_keys(d, "mapping.densities",
                 {"line_points", "small_arc_points", "large_arc_points", "arc_radius_split"});
      cfg.density.line_points =
          get_int_or(d, "mapping.densities", "line_points", cfg.density.line_points);
      cfg.density.small_arc_points =
          get_int_or(d, "mapping.densities", "small_arc_points", cfg.density.small_arc_points);
      cfg.density.large_arc_points =
          get_int_or(d, "mapping.densities", "large_arc_points", cfg.density.large_arc_points);
      cfg.density.arc_radius_split = get_double_or(d, "mapping.densities", "arc_radius_split",
                                                   cfg.density.arc_radius_split);
      cfg.density.validate();
    }
  }

  if (root.contains("solver")) {
    const Json& s = expect_object(root.at("solver"), "solver");
    check_keys(s, "solver", {"M", "tol", "max_iter", "sample_count", "lanczos"});
    cfg.solver.M = get_int_or(s, "solver", "M", cfg.solver.M);
    if (cfg.solver.M < 1) throw ConfigError("solver.M must be >= 1");
    cfg.solver.tol = get_double_or(s, "solver", "tol", cfg.solver.tol);
    if (!(cfg.solver.tol > 0.0)) throw ConfigError("solver.tol must be > 0");
    cfg.solver.max_iter = get_int_or(s, "solver", "max_iter", cfg.solver.max_iter);
    if (cfg.solver.max_iter < 1) throw ConfigError("solver.max_iter must be >= 1");
    cfg.solver.sample_count = get_int_or(s, "solver", "sample_count", cfg.solver.sample_count);
    if (cfg.solver.sample_count != 0 &&
        (cfg.solver.sample_count < 16 ||
         !is_pow2(static_cast<std::size_t>(cfg.solver.sample_count))))
      throw ConfigError("solver.sample_count must be 0 (automatic) or a power of two >= 16");
    cfg.solver.lanczos = get_bool_or(s, "solver", "lanczos", cfg.solver.lanczos);
  }

  if (root.contains("outputs")) {
    const Json& o = expect_object(root.at("outputs"), "outputs");
    check_keys(o, "outputs",
               {"directory", "cavity_profile", "ground_profile", "coefficients", "cavity_points",
                "ground_points"});
    if (o.contains("directory")) cfg.outputs.directory = get_string(o, "outputs", "directory");
    cfg.outputs.cavity_profile =
        get_bool_or(o, "outputs", "cavity_profile", cfg.outputs.cavity_profile);
    cfg.outputs.ground_profile =
        get_bool_or(o, "outputs", "ground_profile", cfg.outputs.ground_profile);
    cfg.outputs.coefficients =
        get_bool_or(o, "outputs", "coefficients", cfg.outputs.coefficients);
    cfg.outputs.cavity_points = get_int_or(o, "outputs", "cavity_points", cfg.outputs.cavity_points);
    cfg.outputs.ground_points = get_int_or(o, "outputs", "ground_points", cfg.outputs.ground_points);
    cfg.outputs.validate();
  }

  if (root.contains("thresholds")) {
    const Json& t = expect_object(root.at("thresholds"), "thresholds");
    check_keys(t, "thresholds",
               {"cavity_traction_scale", "free_surface_scale", "constrained_disp_scale",
                "equilibrium_rel", "resultant_rel", "joint_margin_rel"});
    verify::Thresholds& th = cfg.thresholds;
    th.cavity_traction_scale =
        get_double_or(t, "thresholds", "cavity_traction_scale", th.cavity_traction_scale);
    th.free_surface_scale =
        get_double_or(t, "thresholds", "free_surface_scale", th.free_surface_scale);
    th.constrained_disp_scale =
        get_double_or(t, "thresholds", "constrained_disp_scale", th.constrained_disp_scale);
    th.equilibrium_rel = get_double_or(t, "thresholds", "equilibrium_rel", th.equilibrium_rel);
    th.resultant_rel = get_double_or(t, "thresholds", "resultant_rel", th.resultant_rel);
    th.joint_margin_rel = get_double_or(t, "thresholds", "joint_margin_rel", th.joint_margin_rel);
    th.validate();
  }

  if (root.contains("sweep")) {
    const Json& s = expect_object(root.at("sweep"), "sweep");
    check_keys(s, "sweep", {"kind", "stage_index", "values"});
    SweepSpec sw;
    sw.kind = get_string(s, "sweep", "kind");
    if (sw.kind != "corner" && sw.kind != "kx" && sw.kind != "x0")
      throw ConfigError("sweep.kind must be \"corner\", \"kx\", or \"x0\"");
    sw.stage_index = get_int_or(s, "sweep", "stage_index", sw.stage_index);
    sw.values = get_double_list(s, "sweep", "values");
    verify::detail::require_strictly_increasing(sw.values, "sweep.values");
    cfg.sweep = std::move(sw);
  }

  if (!root.contains("stages")) throw ConfigError("config: missing block \"stages\"");
  {
    const Json& st = root.at("stages");
    if (st.is_string()) {
      if (st.get<std::string>() != kBuiltinStages)
        throw ConfigError("stages: unknown built-in \"" + st.get<std::string>() + "\" (expected \"" +
                          kBuiltinStages + "\")");
      for (int i = 1; i <= 4; ++i)
        cfg.stages.push_back(geometry::benchmark_stage(i, 0.5, cfg.density));
      cfg.stages_echo = Json(kBuiltinStages);
    } else if (st.is_array()) {
      if (st.empty()) throw ConfigError("stages: stage list is empty");
      for (std::size_t i = 0; i < st.size(); ++i)
        cfg.stages.push_back(
            detail::parse_stage(st[i], "stages[" + std::to_string(i) + "]", cfg.density));
      cfg.stages_echo = st;
    } else {
      throw ConfigError("stages: expected \"" + std::string(kBuiltinStages) +
                        "\" or an array of stage objects");
    }
  }

  return cfg;
}

inline RunConfig load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  Json root;
  try {
    root = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse(root);
}

inline Json RunConfig::effective() const {
  Json j;
  j["material"] = {{"gamma", material.gamma}, {"kx", material.kx}, {"E", material.E},
                   {"nu", material.nu}};
  j["ground"] = {{"x0", x0}};
  Json mp;
  mp["beta"] = mapping.beta;
  mp["z_c"] = mapping.z_c ? Json{mapping.z_c->real(), mapping.z_c->imag()} : Json(nullptr);
  mp["w_c"] = mapping.w_c ? Json{mapping.w_c->real(), mapping.w_c->imag()} : Json(nullptr);
  mp["w0_factor"] = mapping.w0_factor;
  mp["factor_ext"] = mapping.factor_ext;
  mp["factor_int"] = mapping.factor_int;
  mp["backward_factor_ext"] = mapping.backward_factor_ext;
  mp["backward_factor_int"] = mapping.backward_factor_int;
  mp["exterior_points"] = mapping.exterior_points;
  mp["densities"] = {{"line_points", density.line_points},
                     {"small_arc_points", density.small_arc_points},
                     {"large_arc_points", density.large_arc_points},
                     {"arc_radius_split", density.arc_radius_split}};
  j["mapping"] = std::move(mp);
  j["solver"] = {{"M", solver.M},
                 {"tol", solver.tol},
                 {"max_iter", solver.max_iter},
                 {"sample_count", solver.sample_count},
                 {"lanczos", solver.lanczos}};
  j["outputs"] = {{"directory", outputs.directory},
                  {"cavity_profile", outputs.cavity_profile},
                  {"ground_profile", outputs.ground_profile},
                  {"coefficients", outputs.coefficients},
                  {"cavity_points", outputs.cavity_points},
                  {"ground_points", outputs.ground_points}};
  j["thresholds"] = {{"cavity_traction_scale", thresholds.cavity_traction_scale},
                     {"free_surface_scale", thresholds.free_surface_scale},
                     {"constrained_disp_scale", thresholds.constrained_disp_scale},
                     {"equilibrium_rel", thresholds.equilibrium_rel},
                     {"resultant_rel", thresholds.resultant_rel},
                     {"joint_margin_rel", thresholds.joint_margin_rel}};
  if (sweep)
    j["sweep"] = {{"kind", sweep->kind}, {"stage_index", sweep->stage_index},
                  {"values", sweep->values}};
  j["stages"] = stages_echo;
  return j;
}

}  // namespace seqtunnel::config
