#include "ddk/optim.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "ddk/random.h"

namespace ddk {

template <typename T>
void adam_step(std::span<Param<T>* const> params, AdamState& state) {
  if (state.first.empty()) {
    for (const Param<T>* p : params) {
      state.first.emplace_back(p->size(), 0.0);
      state.second.emplace_back(p->size(), 0.0);
    }
  }
  if (state.first.size() != params.size()) {
    throw ShapeError("adam_step: parameter list changed between updates");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Param<T>& p = *params[i];
    if (state.first[i].size() != p.size()) {
      throw ShapeError("adam_step: shape of '" + p.name + "' changed");
    }
    if (!p.trainable) continue;
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (!std::isfinite(static_cast<double>(p.grad[j]))) {
        std::ostringstream msg;
        msg << "adam_step: non-finite gradient " << p.grad[j] << " in '"
            << p.name << "' at index " << j << " (step "
            << state.step_count + 1 << ")";
        throw NonFiniteGradient(msg.str());
      }
    }
  }

  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Param<T>& p = *params[i];
    if (!p.trainable) continue;
    auto& m = state.first[i];
    auto& v = state.second[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double g = p.grad[j];
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g;
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g * g;
      const double mhat = m[j] / c1;
      const double vhat = v[j] / c2;
      p.value[j] = static_cast<T>(p.value[j] -
                                  state.lr * mhat / (std::sqrt(vhat) + state.eps));
    }
  }
}

template void adam_step<float>(std::span<Param<float>* const>, AdamState&);
template void adam_step<double>(std::span<Param<double>* const>, AdamState&);

namespace {

template <typename T>
GradCheckResult grad_check_impl(std::span<Param<T>* const> params,
                                const std::function<T(bool)>& objective,
                                const GradCheckOptions& options) {
  objective(true);
  std::vector<std::vector<T>> analytic;
  for (const Param<T>* p : params) analytic.push_back(p->grad);

  GradCheckResult result;
  Rng rng(options.seed);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Param<T>& p = *params[i];
    if (!p.trainable || p.size() == 0) continue;
    std::vector<std::size_t> coords(p.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (options.max_coords_per_param > 0 &&
        coords.size() > options.max_coords_per_param) {
      // Partial Fisher-Yates: a seeded subset of distinct coordinates.
      for (std::size_t k = 0; k < options.max_coords_per_param; ++k) {
        const auto pick = static_cast<std::size_t>(
            rng.uniform_int(static_cast<std::int64_t>(k),
                            static_cast<std::int64_t>(coords.size() - 1)));
        std::swap(coords[k], coords[pick]);
      }
      coords.resize(options.max_coords_per_param);
    }
    for (std::size_t j : coords) {
      const T saved = p.value[j];
      const T h = static_cast<T>(options.step);
      p.value[j] = saved + h;
      const T up = objective(false);
      std::vector<unsigned char> branch_up;
      if (options.branch_pattern) branch_up = options.branch_pattern();
      p.value[j] = saved - h;
      const T down = objective(false);
      p.value[j] = saved;
      if (options.branch_pattern && options.branch_pattern() != branch_up) {
        ++result.coords_skipped;
        continue;
      }
      const T numeric_t = (up - down) / (2 * h);
      const T a_t = analytic[i][j];
      const T denom = std::max({std::abs(a_t), std::abs(numeric_t), T(1e-8)});
      const auto rel = static_cast<double>(std::abs(a_t - numeric_t) / denom);
      const auto a = static_cast<double>(a_t);
      const auto numeric = static_cast<double>(numeric_t);
      ++result.coords_checked;
      if (rel > result.max_rel_error || result.worst_param.empty()) {
        result.max_rel_error = std::max(result.max_rel_error, rel);
        result.worst_param = p.name;
        result.worst_index = j;
        result.analytic = a;
        result.numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace

GradCheckResult grad_check(std::span<Param<double>* const> params,
                           const std::function<double(bool)>& objective,
                           const GradCheckOptions& options) {
  return grad_check_impl<double>(params, objective, options);
}

GradCheckResult grad_check(std::span<Param<long double>* const> params,
                           const std::function<long double(bool)>& objective,
                           const GradCheckOptions& options) {
  return grad_check_impl<long double>(params, objective, options);
}

}  // namespace ddk
