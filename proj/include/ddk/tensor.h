#pragma once

#include <algorithm>
#include <cstddef>
#include <new>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

namespace ddk {

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Dense (batch, channels, length) tensor, row-major with length fastest.
/// 64-byte aligned storage. Vectorized element-wise kernels split work into
/// a scalar head and a packet body at the first aligned address, and the two
/// paths round differently; a fixed base alignment keeps results reproducible.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};

  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlign); }

  template <typename U>
  bool operator==(const AlignedAllocator<U>&) const noexcept { return true; }
};

template <typename T>
using AlignedVector = std::vector<T, AlignedAllocator<T>>;

/// Accumulator for reductions: double, or wider when T is wider.
template <typename T>
using acc_t = std::conditional_t<(sizeof(T) > sizeof(double)), T, double>;

template <typename T>
struct Tensor3 {
  int batch = 0;
  int channels = 0;
  int length = 0;
  std::vector<T> data;

  Tensor3() = default;
  Tensor3(int b, int c, int l, T fill = T(0))
      : batch(b), channels(c), length(l),
        data(static_cast<std::size_t>(b) * c * l, fill) {}

  std::size_t size() const { return data.size(); }

  T& at(int b, int c, int l) {
    return data[(static_cast<std::size_t>(b) * channels + c) * length + l];
  }
  const T& at(int b, int c, int l) const {
    return data[(static_cast<std::size_t>(b) * channels + c) * length + l];
  }
  T* row(int b, int c) {
    return data.data() + (static_cast<std::size_t>(b) * channels + c) * length;
  }
  const T* row(int b, int c) const {
    return data.data() + (static_cast<std::size_t>(b) * channels + c) * length;
  }
};

/// Time-major sequence batch: (steps, batch, features).
template <typename T>
struct Sequence {
  int steps = 0;
  int batch = 0;
  int features = 0;
  std::vector<T> data;

  Sequence() = default;
  Sequence(int t, int b, int f, T fill = T(0))
      : steps(t), batch(b), features(f),
        data(static_cast<std::size_t>(t) * b * f, fill) {}

  T* step(int t) {
    return data.data() + static_cast<std::size_t>(t) * batch * features;
  }
  const T* step(int t) const {
    return data.data() + static_cast<std::size_t>(t) * batch * features;
  }
};

/// Trainable (or buffer) parameter with its gradient accumulator.
template <typename T>
struct Param {
  std::string name;
  std::vector<int> shape;
  std::vector<T> value;
  std::vector<T> grad;
  bool trainable = true;

  Param() = default;
  Param(std::string n, std::vector<int> s, bool train = true)
      : name(std::move(n)), shape(std::move(s)), trainable(train) {
    std::size_t count = 1;
    for (int d : shape) count *= static_cast<std::size_t>(d);
    value.assign(count, T(0));
    grad.assign(count, T(0));
  }

  std::size_t size() const { return value.size(); }
  void zero_grad() { std::fill(grad.begin(), grad.end(), T(0)); }
};

}  // namespace ddk
