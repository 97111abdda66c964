#include <iostream>
#include <optional>
#include <thread>

#include "CLI11.hpp"
#include "hetlayer/config.hpp"
#include "hetlayer/io.hpp"
#include "hetlayer/pipeline.hpp"

int main(int argc, char** argv) {
  using namespace hetlayer;
  CLI::App app{"Minimal heteroclinics, heteroclinic double layers and fourth-order layers of double-well systems"};
  app.footer("\n" + config_help() +
             "\nExit codes: 0 all gates pass, 1 some gate fails, 2 configuration error,\n"
             "            3 solver did not converge (partial artifacts written), 4 hypothesis check failed.");

  std::string config_path, mode, out;
  std::optional<std::uint64_t> seed;
  int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  app.add_option("--config", config_path, "key=value run configuration")->check(CLI::ExistingFile);
  app.add_option("--mode", mode, "heteroclinic | layer2 | layer4 | verify | sweep (overrides the config)");
  app.add_option("--out", out, "output directory (overrides the config)");
  app.add_option("--jobs", jobs, "worker threads; results do not depend on it")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "random seed (overrides the config)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  RunConfig cfg;
  try {
    if (!config_path.empty()) cfg = parse_config(read_file(config_path));
    if (!mode.empty()) cfg.mode = mode;
    if (!out.empty()) cfg.out = out;
    if (seed) cfg.seed = *seed;
    validate_config(cfg);
  } catch (const ConfigError& e) {
    std::cerr << (config_path.empty() ? "config" : config_path) << ": " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return kExitConfig;
  }

  const RunResult r = run(cfg, RunOptions{jobs}, std::cerr);
  std::cerr << r.message << " (exit " << r.exit_code << ")\n";
  return r.exit_code;
}
