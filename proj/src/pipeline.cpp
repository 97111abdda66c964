#include "hetlayer/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <mutex>
#include <sstream>

#include "hetlayer/effective.hpp"
#include "hetlayer/errors.hpp"
#include "hetlayer/fourth_order.hpp"
#include "hetlayer/io.hpp"
#include "hetlayer/layer2d.hpp"
#include "hetlayer/parallel.hpp"
#include "json.hpp"

namespace hetlayer {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

Potential make_potential(const RunConfig& cfg) {
  if (cfg.potential == "decoupled_quartic") {
    const Potential base = make_decoupled_quartic(cfg.m, cfg.rho);
    return Potential(std::make_shared<DecoupledQuartic>(cfg.m), cfg.r.value_or(base.r()), cfg.c.value_or(base.c()),
                     cfg.rho);
  }
  const Potential base = make_elliptic_well(cfg.a, cfg.mu, cfg.rho);
  return Potential(std::make_shared<EllipticWell>(cfg.a, cfg.mu), cfg.r.value_or(base.r()), cfg.c.value_or(base.c()),
                   cfg.rho);
}

namespace {

// Thrown inside a run once the exit code is known; artifacts written so far stay.
struct Stop {
  int code;
  std::string message;
};

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

json fit_json(const DecayFit& f) {
  return {{"k", f.k},
          {"K", f.K},
          {"residual", f.residual},
          {"degenerate", f.degenerate},
          {"window", {f.window_lo, f.window_hi}}};
}

// The resolved config minus `out`: where artifacts go is not an input, and
// leaving it out keeps runs into different directories byte-comparable.
std::string input_text(const RunConfig& cfg) {
  std::istringstream in(config_text(cfg));
  std::string text;
  for (std::string line; std::getline(in, line);)
    if (line.rfind("out=", 0) != 0) text += line + "\n";
  return text;
}

json config_json(const RunConfig& cfg) {
  json j = json::object();
  std::istringstream in(input_text(cfg));
  for (std::string line; std::getline(in, line);) {
    const auto eq = line.find('=');
    j[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return j;
}

SampleSpec sample_spec(const RunConfig& cfg) {
  SampleSpec s;
  s.box_half_width = cfg.box;
  s.box_step = cfg.box_step;
  s.sphere_radius = cfg.sphere_radius;
  return s;
}

json hypothesis_json(const HypothesisReport& h) {
  json zeros = json::array();
  for (const auto& z : h.zeros) zeros.push_back(z);
  json j = {{"two_zeros", h.two_zeros},
            {"hessian_bound", h.hessian_bound},
            {"asymptotic", h.asymptotic},
            {"growth", h.growth ? json(*h.growth) : json(nullptr)},
            {"min_sampled_value", h.min_sampled_value},
            {"zeros", zeros},
            {"measured_c", h.measured_c},
            {"sphere_infimum", h.sphere_infimum},
            {"all_pass", h.all_pass()}};
  return j;
}

struct Gates {
  json items = json::object();
  bool all = true;
  void add(const std::string& name, bool ok) {
    items[name] = ok;
    all = all && ok;
  }
};

struct Context {
  const RunConfig& cfg;
  const RunOptions& opts;
  std::ostream& log;
  fs::path out;
  json report;
  Gates gates;
};

void write_report(Context& c) {
  c.report["gates"] = c.gates.items;
  c.report["passed"] = c.gates.all;
  write_file(c.out / "report.json", c.report.dump(2) + "\n");
}

[[noreturn]] void stop(Context& c, int code, const std::string& message) {
  c.report["status"] = {{"exit_code", code}, {"message", message}};
  c.gates.add("completed", false);
  write_report(c);
  throw Stop{code, message};
}

Potential checked_potential(Context& c) {
  Potential p = make_potential(c.cfg);
  const auto hyp = verify_double_well(p, sample_spec(c.cfg));
  c.report["potential"] = {{"name", p.name()}, {"m", p.dim()}, {"r", p.r()}, {"c", p.c()},
                           {"rho", p.rho() ? json(*p.rho()) : json(nullptr)}};
  c.report["hypotheses"] = hypothesis_json(hyp);
  if (!hyp.all_pass())
    stop(c, kExitHypothesis,
         "double-well hypotheses fail for " + p.name() + " (two_zeros=" + std::to_string(hyp.two_zeros) +
             ", hessian_bound=" + std::to_string(hyp.hessian_bound) + ", asymptotic=" +
             std::to_string(hyp.asymptotic) + ")");
  return p;
}

HeteroclinicSet heteroclinic_stage(Context& c, const Potential& p, const Grid1D& gx) {
  Timer timer;
  MultistartSpec spec;
  spec.solver.tolerance = c.cfg.tol1;
  spec.solver.max_iterations = c.cfg.max_iterations;
  spec.dedup_tolerance = c.cfg.dedup_tol;
  spec.action_tolerance = c.cfg.tol2;
  spec.jobs = c.opts.jobs;
  const HeteroclinicSet F = [&] {
    try {
      return build_heteroclinic_set(p, gx, spec);
    } catch (const NonConvergenceError& e) {
      stop(c, kExitNonConvergence, e.what());
    }
  }();

  fs::create_directories(c.out / "profiles");
  auto member_json = [](const Heteroclinic& h) {
    return json{{"label", std::string(1, h.label)},
                {"action", h.action},
                {"first_integral", h.first_integral},
                {"gradient_sup", h.gradient_sup},
                {"iterations", h.iterations},
                {"start", h.start_index},
                {"decay", {{"left", fit_json(h.decay.left)}, {"right", fit_json(h.decay.right)}}}};
  };
  json members = json::array(), discarded = json::array();
  for (std::size_t k = 0; k < F.members.size(); ++k) {
    const std::string file = "profiles/member_" + std::to_string(k) + ".csv";
    write_profile_csv(c.out / file, F.members[k].path);
    json j = member_json(F.members[k]);
    j["file"] = file;
    members.push_back(j);
  }
  for (const auto& h : F.discarded) discarded.push_back(member_json(h));
  json set = {{"grid", {{"L", gx.half_length()}, {"n", gx.size()}, {"h", gx.spacing()}}},
              {"j_min", F.j_min.value},
              {"two_labels", F.two_labels()},
              {"d_min", F.d_min ? json(*F.d_min) : json(nullptr)},
              {"d_min_h1", F.d_min_h1 ? json(*F.d_min_h1) : json(nullptr)},
              {"rep_minus", F.rep_minus},
              {"rep_plus", F.rep_plus},
              {"rep_minus_h1", F.rep_minus_h1},
              {"rep_plus_h1", F.rep_plus_h1},
              {"members", members},
              {"discarded", discarded}};
  write_file(c.out / "set.json", set.dump(2) + "\n");
  c.report["set"] = {{"file", "set.json"}, {"j_min", F.j_min.value}, {"members", F.members.size()},
                     {"two_labels", F.two_labels()}, {"d_min", set["d_min"]}, {"d_min_h1", set["d_min_h1"]}};
  c.log << "heteroclinic set: " << F.members.size() << " member(s), J_min = " << F.j_min.value << " ("
        << timer.seconds() << " s)\n";
  return F;
}

void heteroclinic_gates(Context& c, const HeteroclinicSet& F) {
  bool actions = true, residuals = true, decay = true;
  for (const auto& h : F.members) {
    actions = actions && std::fabs(h.action - F.j_min.value) <= c.cfg.tol2;
    residuals = residuals && h.gradient_sup <= c.cfg.tol1;
    for (const DecayFit* f : {&h.decay.left, &h.decay.right}) decay = decay && (f->degenerate || f->k > 0.0);
  }
  c.gates.add("members_found", !F.members.empty());
  c.gates.add("member_actions", actions);
  c.gates.add("member_residuals", residuals);
  c.gates.add("member_decay", decay);
}

Grid2D layer_grid(const RunConfig& cfg, const Grid1D& gx) { return Grid2D{Grid1D::with_spacing(cfg.T, cfg.spacing_t()), gx}; }

void write_field(Context& c, const Field2D& u) {
  const std::string name = c.cfg.field_format == "binary" ? "field.bin" : "field.csv";
  if (c.cfg.field_format == "binary") write_field_binary(c.out / name, u);
  else write_field_csv(c.out / name, u);
  c.report["field"] = {{"file", name}, {"order", u.order}, {"n_t", u.grid.rows()}, {"n_x", u.grid.cols()},
                       {"T", u.grid.t.half_length()}, {"L", u.grid.x.half_length()}};
}

// Runs `fn`, recording its failure as a failed gate instead of aborting the report.
template <class F>
void guarded(Context& c, const std::string& name, F&& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    c.report["diagnostics"][name] = {{"error", e.what()}};
    c.gates.add(name, false);
  }
}

void diagnostics(Context& c, const Potential& p, const HeteroclinicSet& F, const Field2D& u) {
  Timer timer;
  const bool fourth = u.order == 4;
  const Order order = fourth ? Order::Fourth : Order::Second;
  const double T = u.grid.t.half_length(), h = std::max(u.grid.ht(), u.grid.hx());
  json& d = c.report["diagnostics"];
  d = json::object();
  const double E = layer_energy(p, u.grid, u.m, u.values, {}, order, c.opts.jobs);
  d["energy"] = E;

  guarded(c, "identity", [&] {
    const double R = fourth ? action4(p, u, F.j_min) : renormalized_action(p, u, F.j_min);
    const double rel = std::fabs(R - (E - 2.0 * T * F.j_min.value)) / std::max(std::fabs(R), 1e-300);
    d["identity"] = {{"renormalized_action", R}, {"energy_minus_2TJ", E - 2.0 * T * F.j_min.value}, {"rel", rel}};
    c.gates.add("identity", rel <= 1e-8);
  });

  if (fourth) {
    guarded(c, "weak_residual", [&] {
      WeakTestSpec ws;
      ws.count = c.cfg.weak_tests;
      ws.seed = c.cfg.seed + 1;
      const auto wr = weak_residual(p, u, ws);
      d["weak_residual"] = {{"max", wr.max}, {"bound", 10.0 * h}, {"tests", wr.values.size()}};
      d["stencil_residual"] = stencil_residual4(p, u).sup;
      c.gates.add("weak_residual", wr.max <= 10.0 * h);
    });
  } else {
    guarded(c, "pde_residual", [&] {
      const double scale = std::max(p.hessian_scale(p.well_minus()), p.hessian_scale(p.well_plus()));
      const double sup = pde_residual(p, u).sup, bound = 10.0 * h * h * scale;
      d["pde_residual"] = {{"sup", sup}, {"bound", bound}};
      c.gates.add("pde_residual", sup <= bound);
    });
  }

  guarded(c, "equipartition", [&] {
    const auto rows = equipartition_rows(p, u, F.j_min, order);
    std::string csv = "t,lhs,rhs,diff,rel\n";
    for (const auto& r : rows)
      csv += format_double(r.t) + "," + format_double(r.lhs) + "," + format_double(r.rhs) + "," +
             format_double(r.diff) + "," + format_double(r.rel) + "\n";
    write_file(c.out / "equipartition.csv", csv);
    const double w = std::min(c.cfg.window(), T), worst = max_equipartition(rows, w);
    d["equipartition"] = {{"file", "equipartition.csv"}, {"window", w}, {"max_rel", worst},
                          {"max_rel_all_rows", max_equipartition(rows, T)}};
    c.gates.add("equipartition", worst <= 2e-2);
  });

  guarded(c, "certificate", [&] {
    const auto cert = class_certificate(p, u, F, fourth ? Metric::H1 : Metric::L2);
    std::string csv = "t,dist_minus,dist_plus\n";
    for (std::size_t i = 0; i < cert.t.size(); ++i)
      csv += format_double(cert.t[i]) + "," + format_double(cert.dist_minus[i]) + "," +
             format_double(cert.dist_plus[i]) + "\n";
    write_file(c.out / "certificate.csv", csv);
    d["certificate"] = {{"file", "certificate.csv"}, {"metric", fourth ? "H1" : "L2"}, {"threshold", cert.threshold},
                        {"t_minus", cert.t_minus}, {"t_plus", cert.t_plus}, {"passed", cert.passed}};
    c.gates.add("certificate", cert.passed);
  });

  guarded(c, "decay", [&] {
    // Fit against the nearest members of each family.
    const std::size_t i0 = 0, i1 = u.grid.rows() - 1;
    auto nearest = [&](std::size_t row) {
      const Path1D r = u.row_path(row);
      std::size_t best = 0;
      double bd = INFINITY;
      for (std::size_t k = 0; k < F.members.size(); ++k) {
        const double dk = path_distance(r, F.members[k].path, Metric::L2);
        if (dk < bd) bd = dk, best = k;
      }
      return best;
    };
    const auto dec = layer_decay_fit(p, u, F.members[nearest(i0)].path, F.members[nearest(i1)].path);
    d["decay"] = {{"t_minus", fit_json(dec.t_minus)}, {"t_plus", fit_json(dec.t_plus)},
                  {"x_minus", fit_json(dec.x_minus)}, {"x_plus", fit_json(dec.x_plus)},
                  {"uniform_sup", dec.uniform_sup}, {"uniform_bound", dec.uniform_bound}};
    auto pos = [](const DecayFit& f) { return !f.degenerate && f.k > 0.0; };
    c.gates.add("decay", fourth ? pos(dec.t_minus) && pos(dec.t_plus) : dec.all_positive());
  });

  guarded(c, "probes", [&] {
    ProbeSpec ps;
    ps.count = c.cfg.probe_count;
    ps.seed = c.cfg.seed;
    ps.min_amplitude = c.cfg.probe_min_amp;
    ps.max_amplitude = c.cfg.probe_max_amp;
    ps.min_half_width = c.cfg.probe_min_width;
    ps.max_half_width = c.cfg.probe_max_width;
    ps.tolerance = c.cfg.tol4;
    const auto led = minimality_probe(p, u, ps, order);
    std::string csv = "ct,cx,wt,wx,amplitude";
    for (int k = 1; k <= u.m; ++k) csv += ",dir" + std::to_string(k);
    csv += ",delta,passed\n";
    for (const auto& r : led.records) {
      csv += format_double(r.bump.ct) + "," + format_double(r.bump.cx) + "," + format_double(r.bump.wt) + "," +
             format_double(r.bump.wx) + "," + format_double(r.bump.amplitude);
      for (double v : r.bump.direction) csv += "," + format_double(v);
      csv += "," + format_double(r.delta) + "," + (r.passed ? "1" : "0") + "\n";
    }
    write_file(c.out / "probes.csv", csv);
    d["probes"] = {{"file", "probes.csv"}, {"count", led.records.size()}, {"threshold", led.threshold},
                   {"min_delta", led.min_delta}, {"all_passed", led.all_passed}};
    c.gates.add("probes", led.all_passed);
  });
  c.log << "diagnostics: " << (c.gates.all ? "all gates pass" : "some gates fail") << " (" << timer.seconds()
        << " s)\n";
}

void run_heteroclinic(Context& c) {
  const Potential p = checked_potential(c);
  const auto F = heteroclinic_stage(c, p, Grid1D::with_spacing(c.cfg.L, c.cfg.spacing_x()));
  heteroclinic_gates(c, F);
}

void run_layer(Context& c, Order order) {
  const Potential p = checked_potential(c);
  const Grid1D gx = Grid1D::with_spacing(c.cfg.L, c.cfg.spacing_x());
  const auto F = heteroclinic_stage(c, p, gx);
  heteroclinic_gates(c, F);
  if (!F.two_labels())
    stop(c, kExitHypothesis,
         "partition hypothesis fails: the minimal heteroclinics form a single family (no d_min > 0), so there is no "
         "double layer between two families");

  LayerOptions lo;
  lo.tolerance = c.cfg.tol3;
  lo.max_iterations = c.cfg.max_iterations;
  lo.jobs = c.opts.jobs;
  lo.keep_history = false;
  const Grid2D grid = layer_grid(c.cfg, gx);
  Timer timer;
  LayerSolve s{Field2D(grid, p.dim()), {}};
  try {
    s = order == Order::Fourth ? minimize_layer4(p, F, grid, std::nullopt, lo) : minimize_layer(p, F, grid, std::nullopt, lo);
  } catch (const NonConvergenceError& e) {
    Field2D last(grid, p.dim());
    last.order = static_cast<int>(order);
    last.values = e.last_iterate();
    write_field(c, last);
    c.report["solve"] = {{"converged", false}, {"iterations", e.iterations()}, {"residual", e.gradient_norm()}};
    stop(c, kExitNonConvergence, e.what());
  } catch (const HypothesisError& e) {
    stop(c, kExitHypothesis, e.what());
  }
  c.log << "layer" << static_cast<int>(order) << ": " << s.stats.iterations << " iterations, residual "
        << s.stats.gradient_sup << " (" << timer.seconds() << " s)\n";
  c.report["solve"] = {{"converged", s.stats.converged},
                       {"iterations", s.stats.iterations},
                       {"evaluations", s.stats.evaluations},
                       {"residual", s.stats.gradient_sup},
                       {"energy", s.energy},
                       {"member_minus", s.member_minus},
                       {"member_plus", s.member_plus}};
  c.gates.add("converged", s.stats.converged);
  write_field(c, s.field);
  diagnostics(c, p, F, s.field);
}

void run_verify(Context& c) {
  const Potential p = checked_potential(c);
  Field2D u = [&] {
    try {
      return read_field(c.cfg.field);
    } catch (const std::exception& e) {
      stop(c, kExitConfig, std::string("field: ") + e.what());
    }
  }();
  if (u.m != p.dim()) stop(c, kExitConfig, "field: dimension does not match the potential");
  c.report["field"] = {{"file", c.cfg.field}, {"order", u.order}, {"n_t", u.grid.rows()}, {"n_x", u.grid.cols()},
                       {"T", u.grid.t.half_length()}, {"L", u.grid.x.half_length()}};
  const auto F = heteroclinic_stage(c, p, u.grid.x);
  diagnostics(c, p, F, u);
}

RunResult run_sweep(Context& c) {
  const std::size_t n = c.cfg.sweep_values.size();
  std::vector<RunResult> results(n);
  std::vector<std::string> logs(n);
  std::vector<RunConfig> configs(n, c.cfg);
  for (std::size_t k = 0; k < n; ++k) {
    configs[k].mode = c.cfg.sweep_mode;
    configs[k].out = (c.out / ("point_" + std::to_string(k))).string();
    set_config_value(configs[k], c.cfg.sweep_key, format_double(c.cfg.sweep_values[k]));
  }
  parallel_for(n, c.opts.jobs, [&](std::size_t k) {
    std::ostringstream log;
    results[k] = run(configs[k], RunOptions{1}, log);
    logs[k] = log.str();
  });
  json points = json::array();
  int code = kExitOk;
  for (std::size_t k = 0; k < n; ++k) {
    c.log << "[point " << k << ", " << c.cfg.sweep_key << " = " << c.cfg.sweep_values[k] << "]\n" << logs[k];
    points.push_back({{"index", k},
                      {"value", c.cfg.sweep_values[k]},
                      {"dir", "point_" + std::to_string(k)},
                      {"exit_code", results[k].exit_code},
                      {"message", results[k].message}});
    code = std::max(code, results[k].exit_code);
  }
  json index = {{"sweep_key", c.cfg.sweep_key}, {"sweep_mode", c.cfg.sweep_mode}, {"hash", c.report["hash"]},
                {"config", c.report["config"]}, {"points", points}};
  write_file(c.out / "index.json", index.dump(2) + "\n");
  return {code, code == kExitOk ? "all sweep points passed" : "some sweep points failed"};
}

}  // namespace

RunResult run(const RunConfig& cfg, const RunOptions& opts, std::ostream& log) {
  try {
    validate_config(cfg);
  } catch (const ConfigError& e) {
    return {kExitConfig, std::string("config: ") + e.what()};
  }
  Context c{cfg, opts, log, fs::path(cfg.out), json::object(), {}};
  try {
    fs::create_directories(c.out);
    std::uint64_t hash = fnv1a(input_text(cfg));
    if (cfg.mode == "verify" && fs::exists(cfg.field)) hash = fnv1a(read_file(cfg.field), hash);
    c.report["mode"] = cfg.mode;
    c.report["hash"] = hex64(hash);
    c.report["config"] = config_json(cfg);

    if (cfg.mode == "sweep") return run_sweep(c);
    if (cfg.mode == "heteroclinic") run_heteroclinic(c);
    else if (cfg.mode == "layer2") run_layer(c, Order::Second);
    else if (cfg.mode == "layer4") run_layer(c, Order::Fourth);
    else run_verify(c);

    const int code = c.gates.all ? kExitOk : kExitGatesFailed;
    const std::string message = c.gates.all ? "all gates pass" : "some gates fail";
    c.report["status"] = {{"exit_code", code}, {"message", message}};
    write_report(c);
    return {code, message};
  } catch (const Stop& s) {
    return {s.code, s.message};
  } catch (const std::exception& e) {
    return {kExitGatesFailed, std::string("error: ") + e.what()};
  }
}

}  // namespace hetlayer
