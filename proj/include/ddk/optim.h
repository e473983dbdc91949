#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ddk/tensor.h"

namespace ddk {

class NonFiniteGradient : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Adam moments for a fixed parameter list. step_count counts updates.
struct AdamState {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t step_count = 0;
  std::vector<std::vector<double>> first;
  std::vector<std::vector<double>> second;
};

/// One bias-corrected Adam update over every trainable parameter.
/// Throws NonFiniteGradient (naming the parameter) before touching any value
/// if a gradient entry is NaN or infinite.
template <typename T>
void adam_step(std::span<Param<T>* const> params, AdamState& state);

struct GradCheckOptions {
  double step = 1e-5;
  /// Coordinates probed per parameter; 0 probes every coordinate.
  std::size_t max_coords_per_param = 0;
  std::uint64_t seed = 1;
  /// Optional branch pattern of the last objective call. A coordinate whose
  /// +h and -h evaluations land on different branches straddles a kink and
  /// is skipped (counted in coords_skipped).
  std::function<std::vector<unsigned char>()> branch_pattern;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t coords_checked = 0;
  std::size_t coords_skipped = 0;
};

/// Compares analytic gradients with central finite differences.
///
/// `objective(true)` must zero gradients, run forward and backward and return
/// the loss; `objective(false)` only evaluates the loss. Relative error is
/// |a - n| / max(|a|, |n|, 1e-8).
GradCheckResult grad_check(std::span<Param<double>* const> params,
                           const std::function<double(bool)>& objective,
                           const GradCheckOptions& options = {});
/// Extended-precision variant: resolves gradients far below 1e-6, where a
/// double-precision loss is limited by its own rounding.
GradCheckResult grad_check(std::span<Param<long double>* const> params,
                           const std::function<long double(bool)>& objective,
                           const GradCheckOptions& options = {});

}  // namespace ddk
