#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hetlayer {

/// Parse or validation failure; `line` is 0 when the problem is not tied to a line.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(int line, std::string key, const std::string& message);
  int line() const { return line_; }
  const std::string& key() const { return key_; }

 private:
  int line_;
  std::string key_;
};

struct RunConfig {
  std::string mode;  // heteroclinic | layer2 | layer4 | verify | sweep

  std::string potential = "elliptic_well";  // or decoupled_quartic
  int m = 2;                                // decoupled_quartic only
  double a = 2.0, mu = 0.1;                 // elliptic_well only
  std::optional<double> rho;
  std::optional<double> r, c;  // override the builtin constants

  // hypothesis sampling
  double box = 3.0, box_step = 0.05, sphere_radius = 5.0;

  double L = 12.0, T = 12.0;
  double h = 0.05;
  std::optional<double> h_t, h_x;  // default to h

  double tol1 = 1e-8;  // heteroclinic: sup of the discrete ODE residual
  double tol2 = 1e-6;  // action level set / effective-potential clamp
  double tol3 = 1e-8;  // layer: sup of the discrete PDE residual
  double tol4 = 1e-8;  // probes: dE >= -tol4 (1 + E)
  int max_iterations = 200000;

  double dedup_tol = 1e-3;

  int probe_count = 100;
  double probe_min_amp = 0.01, probe_max_amp = 0.2;
  double probe_min_width = 0.25, probe_max_width = 1.5;
  int weak_tests = 50;
  double equipartition_window = 0.0;  // 0: T/2

  std::string out = "out";
  std::uint64_t seed = 1;

  std::string field;                  // verify: input field file
  std::string field_format = "csv";   // csv | binary

  std::string sweep_mode = "layer2";
  std::string sweep_key;
  std::vector<double> sweep_values;

  double spacing_t() const { return h_t.value_or(h); }
  double spacing_x() const { return h_x.value_or(h); }
  double window() const { return equipartition_window > 0.0 ? equipartition_window : 0.5 * T; }
};

/// Strict key=value lines; '#' starts a comment. Unknown or repeated keys and
/// malformed values are errors. Does not validate (see validate_config).
RunConfig parse_config(const std::string& text);

/// Sets one key on an existing config (used for command-line overrides).
void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value, int line = 0);

void validate_config(const RunConfig& cfg);

/// Every key with its resolved value, one per line, in a fixed order.
std::string config_text(const RunConfig& cfg);

/// Key reference with defaults, for --help.
std::string config_help();

/// Keys a sweep may vary.
bool sweepable(const std::string& key);

}  // namespace hetlayer
