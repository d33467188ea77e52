#include "config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "exs/errors.hpp"

namespace exs::cli {

namespace {

using njson = nlohmann::json;

void check_keys(const njson& obj, const std::string& where,
                const std::set<std::string>& allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      fail(errc::config, "unknown key \"" + it.key() + "\" in " + where);
}

double get_num(const njson& obj, const std::string& key, double def) {
  if (!obj.contains(key)) return def;
  const auto& v = obj.at(key);
  if (!v.is_number()) fail(errc::config, "\"" + key + "\" must be a number");
  return v.get<double>();
}

int get_int(const njson& obj, const std::string& key, int def) {
  if (!obj.contains(key)) return def;
  const auto& v = obj.at(key);
  if (!v.is_number_integer()) fail(errc::config, "\"" + key + "\" must be an integer");
  return v.get<int>();
}

std::string get_str(const njson& obj, const std::string& key, const std::string& def) {
  if (!obj.contains(key)) return def;
  const auto& v = obj.at(key);
  if (!v.is_string()) fail(errc::config, "\"" + key + "\" must be a string");
  return v.get<std::string>();
}

bool get_bool(const njson& obj, const std::string& key, bool def) {
  if (!obj.contains(key)) return def;
  const auto& v = obj.at(key);
  if (!v.is_boolean()) fail(errc::config, "\"" + key + "\" must be a boolean");
  return v.get<bool>();
}

FuncDesc parse_func(const njson& obj, const std::string& where, bool conformal,
                    const FuncDesc& def) {
  if (obj.is_null()) return def;
  if (!obj.is_object()) fail(errc::config, where + " must be an object");
  check_keys(obj, where, {"kind", "value", "j", "amplitude", "mean_zero", "index"});
  FuncDesc f = def;
  f.kind = get_str(obj, "kind", def.kind);
  static const std::set<std::string> conf_kinds = {"zero", "constant", "cos_mode", "seeded"};
  static const std::set<std::string> tensor_kinds = {"zero", "constant", "cos_mode",
                                                     "coordinate", "metric_uu", "metric_vv"};
  const auto& kinds = conformal ? conf_kinds : tensor_kinds;
  if (!kinds.count(f.kind)) fail(errc::config, where + ": unsupported kind \"" + f.kind + "\"");
  f.value = get_num(obj, "value", def.value);
  f.j = get_int(obj, "j", def.j);
  f.amplitude = get_num(obj, "amplitude", def.amplitude);
  f.mean_zero = get_bool(obj, "mean_zero", def.mean_zero);
  f.index = get_int(obj, "index", def.index);
  if (f.kind == "cos_mode" && f.j < 1) fail(errc::config, where + ": cos_mode needs j >= 1");
  if (f.kind == "seeded" && f.index < 0) fail(errc::config, where + ": seeded needs index >= 0");
  return f;
}

}  // namespace

JobConfig parse_config_text(const std::string& text) {
  njson root;
  try {
    root = njson::parse(text);
  } catch (const std::exception& e) {
    fail(errc::config, std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) fail(errc::config, "config root must be an object");
  check_keys(root, "config",
             {"surface", "domain", "bc", "conformal_weight", "mesh_n", "spectrum", "check",
              "certificate", "scan", "export", "info"});

  JobConfig cfg;

  if (root.contains("surface")) {
    const auto& s = root.at("surface");
    if (!s.is_object()) fail(errc::config, "\"surface\" must be an object");
    check_keys(s, "surface", {"kind", "alpha", "gamma", "flat_length"});
    cfg.surface_kind = get_str(s, "kind", cfg.surface_kind);
    if (cfg.surface_kind != "unduloid" && cfg.surface_kind != "flat")
      fail(errc::config, "surface.kind must be \"unduloid\" or \"flat\"");
    cfg.alpha = get_num(s, "alpha", cfg.alpha);
    cfg.gamma = get_num(s, "gamma", cfg.gamma);
    cfg.flat_length = get_num(s, "flat_length", cfg.flat_length);
    if (cfg.surface_kind == "flat" && !(cfg.flat_length > 0.0))
      fail(errc::config, "surface.flat_length must be positive");
  }

  if (root.contains("domain")) {
    const auto& d = root.at("domain");
    if (!d.is_object()) fail(errc::config, "\"domain\" must be an object");
    check_keys(d, "domain", {"v_a", "v_b", "auto_zeros"});
    if (d.contains("auto_zeros")) {
      if (d.contains("v_a") || d.contains("v_b"))
        fail(errc::config, "domain: give either auto_zeros or explicit bounds, not both");
      const auto& az = d.at("auto_zeros");
      if (!az.is_array() || az.size() != 2 || !az[0].is_number_integer() ||
          !az[1].is_number_integer())
        fail(errc::config, "domain.auto_zeros must be a pair of integers");
      cfg.has_auto_zeros = true;
      cfg.auto_zero_a = az[0].get<int>();
      cfg.auto_zero_b = az[1].get<int>();
      if (cfg.auto_zero_a < 0 || cfg.auto_zero_b <= cfg.auto_zero_a)
        fail(errc::config, "domain.auto_zeros must satisfy 0 <= first < second");
    } else if (d.contains("v_a") || d.contains("v_b")) {
      if (!d.contains("v_a") || !d.contains("v_b"))
        fail(errc::config, "domain needs both v_a and v_b");
      cfg.has_bounds = true;
      cfg.v_a = get_num(d, "v_a", 0.0);
      cfg.v_b = get_num(d, "v_b", 0.0);
      if (!(cfg.v_a < cfg.v_b)) fail(errc::config, "domain requires v_a < v_b");
    }
  }

  cfg.bc = get_str(root, "bc", cfg.bc);
  if (cfg.bc != "neumann" && cfg.bc != "dirichlet")
    fail(errc::config, "bc must be \"neumann\" or \"dirichlet\"");
  cfg.conformal_weight = get_str(root, "conformal_weight", cfg.conformal_weight);
  if (cfg.conformal_weight != "gauss" && cfg.conformal_weight != "none")
    fail(errc::config, "conformal_weight must be \"gauss\" or \"none\"");
  cfg.mesh_n = get_int(root, "mesh_n", cfg.mesh_n);
  if (cfg.mesh_n < 4) fail(errc::config, "mesh_n must be at least 4");

  if (root.contains("spectrum")) {
    const auto& s = root.at("spectrum");
    if (!s.is_object()) fail(errc::config, "\"spectrum\" must be an object");
    check_keys(s, "spectrum", {"count", "m_max", "target"});
    cfg.count = get_int(s, "count", cfg.count);
    if (cfg.count < 1) fail(errc::config, "spectrum.count must be at least 1");
    cfg.m_max = get_int(s, "m_max", cfg.m_max);
    if (cfg.m_max < 0) fail(errc::config, "spectrum.m_max must be nonnegative");
    if (s.contains("target")) cfg.target = get_num(s, "target", 0.0);
  }

  if (root.contains("check")) {
    const auto& c = root.at("check");
    if (!c.is_object()) fail(errc::config, "\"check\" must be an object");
    check_keys(c, "check", {"kind", "k", "steps", "psi", "h_uu", "h_vv"});
    cfg.check_kind = get_str(c, "kind", cfg.check_kind);
    if (cfg.check_kind != "conformal" && cfg.check_kind != "tensor")
      fail(errc::config, "check.kind must be \"conformal\" or \"tensor\"");
    cfg.check_k = get_int(c, "k", cfg.check_k);
    if (c.contains("steps")) {
      const auto& st = c.at("steps");
      if (!st.is_array() || st.empty()) fail(errc::config, "check.steps must be a nonempty array");
      cfg.steps.clear();
      for (const auto& v : st) {
        if (!v.is_number() || !(v.get<double>() > 0.0))
          fail(errc::config, "check.steps entries must be positive numbers");
        cfg.steps.push_back(v.get<double>());
      }
    }
    if (c.contains("psi")) cfg.psi = parse_func(c.at("psi"), "check.psi", true, cfg.psi);
    if (c.contains("h_uu")) cfg.h_uu = parse_func(c.at("h_uu"), "check.h_uu", false, cfg.h_uu);
    if (c.contains("h_vv")) cfg.h_vv = parse_func(c.at("h_vv"), "check.h_vv", false, cfg.h_vv);
  }

  if (root.contains("certificate")) {
    const auto& c = root.at("certificate");
    if (!c.is_object()) fail(errc::config, "\"certificate\" must be an object");
    check_keys(c, "certificate", {"k", "cluster_value", "max_iterations", "mode"});
    cfg.cert_k = get_int(c, "k", cfg.cert_k);
    if (c.contains("cluster_value")) cfg.cluster_value = get_num(c, "cluster_value", 0.0);
    cfg.max_iterations = get_int(c, "max_iterations", static_cast<int>(cfg.max_iterations));
    if (cfg.max_iterations < 1) fail(errc::config, "certificate.max_iterations must be positive");
    cfg.cert_mode = get_str(c, "mode", cfg.cert_mode);
    if (cfg.cert_mode != "extremal" && cfg.cert_mode != "global")
      fail(errc::config, "certificate.mode must be \"extremal\" or \"global\"");
  }

  if (root.contains("scan")) {
    const auto& s = root.at("scan");
    if (!s.is_object()) fail(errc::config, "\"scan\" must be an object");
    check_keys(s, "scan", {"t_grid", "n_psi"});
    if (s.contains("t_grid")) {
      const auto& tg = s.at("t_grid");
      if (!tg.is_array() || tg.size() < 2) fail(errc::config, "scan.t_grid must list at least 2 points");
      cfg.t_grid.clear();
      for (const auto& v : tg) {
        if (!v.is_number()) fail(errc::config, "scan.t_grid entries must be numbers");
        cfg.t_grid.push_back(v.get<double>());
      }
    }
    cfg.scan_n_psi = get_int(s, "n_psi", cfg.scan_n_psi);
    if (cfg.scan_n_psi < 1) fail(errc::config, "scan.n_psi must be at least 1");
  }

  if (root.contains("export")) {
    const auto& e = root.at("export");
    if (!e.is_object()) fail(errc::config, "\"export\" must be an object");
    check_keys(e, "export", {"samples", "k"});
    cfg.samples = get_int(e, "samples", cfg.samples);
    if (cfg.samples < 2) fail(errc::config, "export.samples must be at least 2");
    cfg.export_k = get_int(e, "k", cfg.export_k);
  }

  if (root.contains("info")) {
    const auto& e = root.at("info");
    if (!e.is_object()) fail(errc::config, "\"info\" must be an object");
    check_keys(e, "info", {"window"});
    if (e.contains("window")) {
      const auto& w = e.at("window");
      if (!w.is_array() || w.size() != 2 || !w[0].is_number() || !w[1].is_number())
        fail(errc::config, "info.window must be [lo, hi]");
      cfg.window = std::make_pair(w[0].get<double>(), w[1].get<double>());
    }
  }

  return cfg;
}

JobConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(errc::config, "cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

namespace {

jsonw::Value echo_func(const FuncDesc& f) {
  auto v = jsonw::Value::object();
  v.set("kind", f.kind);
  v.set("value", f.value);
  v.set("j", f.j);
  v.set("amplitude", f.amplitude);
  v.set("mean_zero", f.mean_zero);
  v.set("index", f.index);
  return v;
}

}  // namespace

jsonw::Value echo_config(const JobConfig& cfg) {
  auto root = jsonw::Value::object();
  {
    auto s = jsonw::Value::object();
    s.set("kind", cfg.surface_kind);
    s.set("alpha", cfg.alpha);
    s.set("gamma", cfg.gamma);
    s.set("flat_length", cfg.flat_length);
    root.set("surface", std::move(s));
  }
  {
    auto d = jsonw::Value::object();
    if (cfg.has_auto_zeros) {
      auto az = jsonw::Value::array();
      az.push(jsonw::Value::integer(cfg.auto_zero_a));
      az.push(jsonw::Value::integer(cfg.auto_zero_b));
      d.set("auto_zeros", std::move(az));
    } else if (cfg.has_bounds) {
      d.set("v_a", cfg.v_a);
      d.set("v_b", cfg.v_b);
    } else if (cfg.surface_kind == "flat") {
      d.set("v_a", 0.0);
      d.set("v_b", cfg.flat_length);
    }
    root.set("domain", std::move(d));
  }
  root.set("bc", cfg.bc);
  root.set("conformal_weight", cfg.conformal_weight);
  root.set("mesh_n", cfg.mesh_n);
  {
    auto s = jsonw::Value::object();
    s.set("count", cfg.count);
    s.set("m_max", cfg.m_max);
    if (cfg.target) s.set("target", *cfg.target);
    root.set("spectrum", std::move(s));
  }
  {
    auto c = jsonw::Value::object();
    c.set("kind", cfg.check_kind);
    c.set("k", cfg.check_k);
    auto st = jsonw::Value::array();
    for (double s : cfg.steps) st.push(s);
    c.set("steps", std::move(st));
    c.set("psi", echo_func(cfg.psi));
    c.set("h_uu", echo_func(cfg.h_uu));
    c.set("h_vv", echo_func(cfg.h_vv));
    root.set("check", std::move(c));
  }
  {
    auto c = jsonw::Value::object();
    c.set("k", cfg.cert_k);
    if (cfg.cluster_value) c.set("cluster_value", *cfg.cluster_value);
    c.set("max_iterations", static_cast<long long>(cfg.max_iterations));
    c.set("mode", cfg.cert_mode);
    root.set("certificate", std::move(c));
  }
  {
    auto s = jsonw::Value::object();
    auto tg = jsonw::Value::array();
    for (double t : cfg.t_grid) tg.push(t);
    s.set("t_grid", std::move(tg));
    s.set("n_psi", cfg.scan_n_psi);
    root.set("scan", std::move(s));
  }
  {
    auto e = jsonw::Value::object();
    e.set("samples", cfg.samples);
    e.set("k", cfg.export_k);
    root.set("export", std::move(e));
  }
  {
    auto e = jsonw::Value::object();
    if (cfg.window) {
      auto w = jsonw::Value::array();
      w.push(cfg.window->first);
      w.push(cfg.window->second);
      e.set("window", std::move(w));
    }
    root.set("info", std::move(e));
  }
  return root;
}

JobDomain build_domain(const JobConfig& cfg) {
  using revolution::BoundaryCondition;
  using revolution::ConformalWeight;
  const auto bc = cfg.bc == "neumann" ? BoundaryCondition::neumann : BoundaryCondition::dirichlet;
  const auto weight =
      cfg.conformal_weight == "gauss" ? ConformalWeight::gauss : ConformalWeight::none;

  JobDomain jd;
  if (cfg.surface_kind == "unduloid") {
    revolution::UnduloidSurface surf(cfg.alpha, cfg.gamma);
    double a, b;
    if (cfg.has_auto_zeros) {
      const auto zeros = surf.curvature_zeros(0.0, 2.0 * surf.period());
      if (cfg.auto_zero_b >= static_cast<int>(zeros.size()))
        fail(errc::config, "domain.auto_zeros index beyond the zeros in [0, 2T)");
      a = zeros[cfg.auto_zero_a];
      b = zeros[cfg.auto_zero_b];
    } else if (cfg.has_bounds) {
      a = cfg.v_a;
      b = cfg.v_b;
    } else {
      fail(errc::config, "unduloid jobs need domain bounds or auto_zeros");
    }
    jd.domain = revolution::make_domain(surf, a, b, bc, weight);
    jd.surface = surf;
    jd.resolved_v_a = a;
    jd.resolved_v_b = b;
  } else {
    if (cfg.has_auto_zeros) fail(errc::config, "auto_zeros requires an unduloid surface");
    const double a = cfg.has_bounds ? cfg.v_a : 0.0;
    const double b = cfg.has_bounds ? cfg.v_b : cfg.flat_length;
    jd.domain = revolution::make_domain(revolution::flat_profile(), a, b, bc, weight);
    jd.resolved_v_a = a;
    jd.resolved_v_b = b;
  }
  jd.mesh = spectral::Mesh1D::uniform(jd.resolved_v_a, jd.resolved_v_b, cfg.mesh_n);
  return jd;
}

}  // namespace exs::cli
