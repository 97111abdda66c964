#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace hetlayer {

// Optimizer ran out of iterations (or stalled) before meeting its stop rule.
class NonConvergenceError : public std::runtime_error {
 public:
  NonConvergenceError(const std::string& what, std::vector<double> last_iterate,
                      double gradient_norm, int iterations)
      : std::runtime_error(what),
        last_iterate_(std::move(last_iterate)),
        gradient_norm_(gradient_norm),
        iterations_(iterations) {}

  const std::vector<double>& last_iterate() const { return last_iterate_; }
  double gradient_norm() const { return gradient_norm_; }
  int iterations() const { return iterations_; }

 private:
  std::vector<double> last_iterate_;
  double gradient_norm_;
  int iterations_;
};

// A path whose axis projection never changes sign cannot be translation-pinned.
class PinningError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The computed heteroclinic set does not split into the requested labels.
class PartitionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A standing hypothesis (double well, two-label partition, ...) fails, so the
// requested construction does not apply.
class HypothesisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnsupportedOperation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Internal-consistency violation, e.g. an effective potential well below zero,
// which means the supplied J_min was not minimal.
class ConsistencyError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace hetlayer
