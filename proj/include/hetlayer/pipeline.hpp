#pragma once

#include <ostream>
#include <string>

#include "hetlayer/config.hpp"
#include "hetlayer/potential.hpp"

namespace hetlayer {

enum ExitCode : int {
  kExitOk = 0,
  kExitGatesFailed = 1,
  kExitConfig = 2,
  kExitNonConvergence = 3,
  kExitHypothesis = 4,
};

struct RunOptions {
  int jobs = 1;  // worker threads; never changes the artifacts
};

struct RunResult {
  int exit_code = kExitOk;
  std::string message;
};

/// Builtin potential with the config's parameters and overrides.
Potential make_potential(const RunConfig& cfg);

/// Validates `cfg`, runs its mode and writes every artifact under cfg.out:
///
///   report.json          resolved config, input hash, hypothesis check, diagnostics, gates
///   set.json             heteroclinic set summary (all modes but sweep)
///   profiles/member_K.csv
///   field.csv|field.bin  layer2 / layer4
///   equipartition.csv, certificate.csv, probes.csv
///   index.json           sweep: one entry per point_K/ subdirectory
///
/// Never throws; failures map to the exit codes above.
RunResult run(const RunConfig& cfg, const RunOptions& opts, std::ostream& log);

}  // namespace hetlayer
