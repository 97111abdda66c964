#include "hetlayer/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>

namespace hetlayer {

ConfigError::ConfigError(int line, std::string key, const std::string& message)
    : std::runtime_error((line > 0 ? "line " + std::to_string(line) + ": " : std::string()) +
                         (key.empty() ? std::string() : key + ": ") + message),
      line_(line),
      key_(std::move(key)) {}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);  // shortest round-trip form
  return std::string(buf, r.ptr);
}

double to_double(const std::string& v) {
  double x = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size()) throw std::invalid_argument("expected a number, got '" + v + "'");
  return x;
}

template <class I>
I to_integer(const std::string& v) {
  I x = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size()) throw std::invalid_argument("expected an integer, got '" + v + "'");
  return x;
}

std::optional<double> to_optional(const std::string& v) {
  if (v.empty() || v == "none") return std::nullopt;
  return to_double(v);
}

std::string opt(const std::optional<double>& v) { return v ? fmt(*v) : "none"; }

struct Key {
  const char* name;
  const char* help;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define HL_DOUBLE(field, help) \
  Key { #field, help, [](RunConfig& c, const std::string& v) { c.field = to_double(v); }, [](const RunConfig& c) { return fmt(c.field); } }
#define HL_OPTIONAL(field, help)                                                     \
  Key {                                                                              \
    #field, help, [](RunConfig& c, const std::string& v) { c.field = to_optional(v); }, \
        [](const RunConfig& c) { return opt(c.field); }                              \
  }
#define HL_INT(field, help)                                                                     \
  Key {                                                                                         \
    #field, help, [](RunConfig& c, const std::string& v) { c.field = to_integer<int>(v); },     \
        [](const RunConfig& c) { return std::to_string(c.field); }                              \
  }
#define HL_STRING(field, help) \
  Key { #field, help, [](RunConfig& c, const std::string& v) { c.field = v; }, [](const RunConfig& c) { return c.field; } }

const std::vector<Key>& keys() {
  static const std::vector<Key> k = {
      HL_STRING(mode, "heteroclinic | layer2 | layer4 | verify | sweep (required)"),
      HL_STRING(potential, "elliptic_well | decoupled_quartic"),
      HL_INT(m, "dimension of decoupled_quartic"),
      HL_DOUBLE(a, "elliptic_well ellipse parameter"),
      HL_DOUBLE(mu, "elliptic_well soft-direction curvature"),
      HL_OPTIONAL(rho, "invariant-ball radius for the growth condition (none)"),
      HL_OPTIONAL(r, "override the nondegeneracy radius (none: builtin)"),
      HL_OPTIONAL(c, "override the convexity bound (none: builtin)"),
      HL_DOUBLE(box, "hypothesis check: sampling box half width"),
      HL_DOUBLE(box_step, "hypothesis check: sampling step"),
      HL_DOUBLE(sphere_radius, "hypothesis check: radius R of the far sphere"),
      HL_DOUBLE(L, "half length in x"),
      HL_DOUBLE(T, "half length in t"),
      HL_DOUBLE(h, "grid spacing (both directions)"),
      HL_OPTIONAL(h_t, "spacing in t (none: h)"),
      HL_OPTIONAL(h_x, "spacing in x (none: h)"),
      HL_DOUBLE(tol1, "heteroclinic stop: sup of the discrete ODE residual"),
      HL_DOUBLE(tol2, "action tolerance of the minimal set and the effective-potential clamp"),
      HL_DOUBLE(tol3, "layer stop: sup of the discrete PDE residual"),
      HL_DOUBLE(tol4, "probe acceptance: dE >= -tol4 (1 + E)"),
      HL_INT(max_iterations, "optimizer iteration cap"),
      HL_DOUBLE(dedup_tol, "L2 distance under which two heteroclinics are the same"),
      HL_INT(probe_count, "number of random minimality probes"),
      HL_DOUBLE(probe_min_amp, "smallest probe amplitude"),
      HL_DOUBLE(probe_max_amp, "largest probe amplitude"),
      HL_DOUBLE(probe_min_width, "smallest probe half width"),
      HL_DOUBLE(probe_max_width, "largest probe half width"),
      HL_INT(weak_tests, "number of weak-form test bumps (layer4)"),
      HL_DOUBLE(equipartition_window, "equipartition gate on |t| <= window (0: T/2)"),
      HL_STRING(out, "output directory"),
      Key{"seed", "random seed (probes and test bumps)",
          [](RunConfig& c, const std::string& v) { c.seed = to_integer<std::uint64_t>(v); },
          [](const RunConfig& c) { return std::to_string(c.seed); }},
      HL_STRING(field, "verify: field file to check"),
      HL_STRING(field_format, "field files: csv | binary"),
      HL_STRING(sweep_mode, "sweep: mode run at every point (heteroclinic | layer2 | layer4)"),
      HL_STRING(sweep_key, "sweep: numeric key to vary"),
      Key{"sweep_values", "sweep: comma-separated values",
          [](RunConfig& c, const std::string& v) {
            c.sweep_values.clear();
            std::stringstream ss(v);
            std::string item;
            while (std::getline(ss, item, ',')) c.sweep_values.push_back(to_double(trim(item)));
          },
          [](const RunConfig& c) {
            std::string s;
            for (std::size_t i = 0; i < c.sweep_values.size(); ++i) s += (i ? "," : "") + fmt(c.sweep_values[i]);
            return s;
          }},
  };
  return k;
}

#undef HL_DOUBLE
#undef HL_OPTIONAL
#undef HL_INT
#undef HL_STRING

const Key* find_key(const std::string& name) {
  for (const auto& k : keys())
    if (name == k.name) return &k;
  return nullptr;
}

}  // namespace

void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value, int line) {
  const Key* k = find_key(key);
  if (!k) throw ConfigError(line, key, "unknown key");
  try {
    k->set(cfg, value);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(line, key, e.what());
  }
}

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError(line, "", "expected key=value");
    const std::string key = trim(s.substr(0, eq)), value = trim(s.substr(eq + 1));
    if (!seen.insert(key).second) throw ConfigError(line, key, "repeated key");
    set_config_value(cfg, key, value, line);
  }
  return cfg;
}

bool sweepable(const std::string& key) {
  static const std::set<std::string> ok = {"a", "mu", "rho", "L", "T", "h", "h_t", "h_x", "tol1", "tol3", "box"};
  return ok.count(key) > 0;
}

void validate_config(const RunConfig& c) {
  static const std::set<std::string> modes = {"heteroclinic", "layer2", "layer4", "verify", "sweep"};
  if (c.mode.empty()) throw ConfigError(0, "mode", "required");
  if (!modes.count(c.mode)) throw ConfigError(0, "mode", "unknown mode '" + c.mode + "'");
  if (c.potential != "elliptic_well" && c.potential != "decoupled_quartic")
    throw ConfigError(0, "potential", "unknown potential '" + c.potential + "'");
  auto positive = [](double v, const char* key) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(0, key, "must be positive");
  };
  if (c.m < 2) throw ConfigError(0, "m", "must be at least 2");
  positive(c.mu, "mu");
  positive(c.a, "a");
  if (c.rho) positive(*c.rho, "rho");
  if (c.r) positive(*c.r, "r");
  if (c.c) positive(*c.c, "c");
  positive(c.box, "box");
  positive(c.box_step, "box_step");
  positive(c.sphere_radius, "sphere_radius");
  positive(c.L, "L");
  positive(c.T, "T");
  positive(c.h, "h");
  if (c.h_t) positive(*c.h_t, "h_t");
  if (c.h_x) positive(*c.h_x, "h_x");
  if (c.spacing_x() > c.L) throw ConfigError(0, "h_x", "larger than L");
  if (c.spacing_t() > c.T) throw ConfigError(0, "h_t", "larger than T");
  positive(c.tol1, "tol1");
  positive(c.tol2, "tol2");
  positive(c.tol3, "tol3");
  positive(c.tol4, "tol4");
  positive(c.dedup_tol, "dedup_tol");
  if (c.max_iterations < 1) throw ConfigError(0, "max_iterations", "must be positive");
  if (c.probe_count < 0) throw ConfigError(0, "probe_count", "must be nonnegative");
  if (c.weak_tests < 0) throw ConfigError(0, "weak_tests", "must be nonnegative");
  positive(c.probe_min_amp, "probe_min_amp");
  positive(c.probe_min_width, "probe_min_width");
  if (c.probe_max_amp < c.probe_min_amp) throw ConfigError(0, "probe_max_amp", "below probe_min_amp");
  if (c.probe_max_width < c.probe_min_width) throw ConfigError(0, "probe_max_width", "below probe_min_width");
  if (c.equipartition_window < 0.0) throw ConfigError(0, "equipartition_window", "must be nonnegative");
  if (c.out.empty()) throw ConfigError(0, "out", "required");
  if (c.field_format != "csv" && c.field_format != "binary")
    throw ConfigError(0, "field_format", "must be csv or binary");
  if (c.mode == "verify" && c.field.empty()) throw ConfigError(0, "field", "required in verify mode");
  if (c.mode == "sweep") {
    if (c.sweep_mode != "heteroclinic" && c.sweep_mode != "layer2" && c.sweep_mode != "layer4")
      throw ConfigError(0, "sweep_mode", "must be heteroclinic, layer2 or layer4");
    if (!sweepable(c.sweep_key)) throw ConfigError(0, "sweep_key", "not a sweepable key: '" + c.sweep_key + "'");
    if (c.sweep_values.empty()) throw ConfigError(0, "sweep_values", "required in sweep mode");
  }
}

std::string config_text(const RunConfig& cfg) {
  std::string s;
  for (const auto& k : keys()) s += std::string(k.name) + "=" + k.get(cfg) + "\n";
  return s;
}

std::string config_help() {
  const RunConfig defaults;
  std::string s = "Config keys (key=value, one per line, '#' comments):\n";
  for (const auto& k : keys()) {
    const std::string d = k.get(defaults);
    char buf[64];
    std::snprintf(buf, sizeof buf, "  %-22s", k.name);
    s += buf + std::string(k.help) + (d.empty() ? "" : " [default: " + d + "]") + "\n";
  }
  return s;
}

}  // namespace hetlayer
