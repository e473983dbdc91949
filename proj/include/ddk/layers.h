#pragma once

// Hand-written forward/backward kernels for the two segmentation networks.
// Every layer caches what its backward pass needs from the most recent
// forward call, so a layer instance serves one forward/backward pair at a
// time. Backward passes accumulate into Param::grad.

#include <span>
#include <stdexcept>
#include <vector>

#include "ddk/random.h"
#include "ddk/tensor.h"

namespace ddk {

enum class Mode { Train, Eval };

class LabelError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

struct ConvSpec {
  int in_channels = 1;
  int out_channels = 1;
  int kernel = 1;
  int stride = 1;
  int dilation = 1;
  int pad_left = 0;
  int pad_right = 0;

  int effective_kernel() const { return dilation * (kernel - 1) + 1; }

  /// Padding that makes out_length == floor(in_length / stride).
  static ConvSpec length_preserving(int in, int out, int kernel, int stride,
                                    int dilation = 1);
};

template <typename T>
class Conv1d {
 public:
  explicit Conv1d(const ConvSpec& spec);

  int out_length(int in_length) const;
  Tensor3<T> forward(const Tensor3<T>& x);
  Tensor3<T> backward(const Tensor3<T>& dy);

  const ConvSpec& spec() const { return spec_; }
  std::vector<Param<T>*> params() { return {&weight, &bias}; }

  Param<T> weight;  // (out, in, kernel)
  Param<T> bias;    // (out)

 private:
  void im2col(const T* x, int in_length, int out_length, T* cols) const;
  void col2im(const T* cols, int in_length, int out_length, T* dx) const;

  ConvSpec spec_;
  Tensor3<T> input_;
};

/// Per-channel batch normalization over (batch, length).
template <typename T>
class BatchNorm1d {
 public:
  explicit BatchNorm1d(int channels, double momentum = 0.1, double eps = 1e-5);

  Tensor3<T> forward(const Tensor3<T>& x, Mode mode);
  Tensor3<T> backward(const Tensor3<T>& dy);

  std::vector<Param<T>*> params() {
    return {&weight, &bias, &running_mean, &running_var};
  }

  Param<T> weight;
  Param<T> bias;
  Param<T> running_mean;
  Param<T> running_var;

 private:
  int channels_;
  double momentum_;
  double eps_;
  Mode mode_ = Mode::Eval;
  std::vector<T> normalized_;
  std::vector<acc_t<T>> inv_std_;
  int batch_ = 0;
  int length_ = 0;
};

template <typename T>
class LeakyRelu {
 public:
  explicit LeakyRelu(double slope = 0.01) : slope_(static_cast<T>(slope)) {}

  void forward(std::vector<T>& x);
  void backward(std::vector<T>& dy) const;

  /// 1 where the last forward input was negative.
  const std::vector<unsigned char>& negative_mask() const { return negative_; }

 private:
  T slope_;
  std::vector<unsigned char> negative_;
};

/// Inverted dropout: survivors are scaled by 1/(1-p) in train mode.
template <typename T>
class Dropout {
 public:
  explicit Dropout(double p = 0.1);

  void forward(std::vector<T>& x, Mode mode, Rng& rng);
  void backward(std::vector<T>& dy) const;

 private:
  double p_;
  std::vector<T> mask_;
  bool active_ = false;
};

/// One bidirectional LSTM layer (gate order input, forget, cell, output).
/// Output features are [forward hidden, backward hidden].
template <typename T>
class BiLstm {
 public:
  BiLstm(int input_size, int hidden_size);

  Sequence<T> forward(const Sequence<T>& x);
  Sequence<T> backward(const Sequence<T>& dy);

  int input_size() const { return input_size_; }
  int hidden_size() const { return hidden_; }

  std::vector<Param<T>*> params() {
    return {&w_ih[0], &w_hh[0], &b[0], &w_ih[1], &w_hh[1], &b[1]};
  }

  // Index 0 runs forward in time, index 1 backward.
  Param<T> w_ih[2];  // (4H, input)
  Param<T> w_hh[2];  // (4H, H)
  Param<T> b[2];     // (4H)

 private:
  struct Cache {
    AlignedVector<T> gates;  // (T*B, 4H) post-activation
    AlignedVector<T> cell;   // (T*B, H)
    AlignedVector<T> tanh_cell;
    AlignedVector<T> hidden;
  };

  void run_direction(int dir, const Sequence<T>& x, Sequence<T>& y);
  void back_direction(int dir, const Sequence<T>& dy, Sequence<T>& dx);

  int input_size_;
  int hidden_;
  Sequence<T> input_;
  Cache cache_[2];
};

/// Row-wise affine map y = W x + b for a (rows, in) matrix.
template <typename T>
class Linear {
 public:
  Linear(int in_features, int out_features);

  std::vector<T> forward(const std::vector<T>& x, int rows);
  std::vector<T> backward(const std::vector<T>& dy);

  int in_features() const { return in_; }
  int out_features() const { return out_; }
  std::vector<Param<T>*> params() { return {&weight, &bias}; }

  Param<T> weight;  // (out, in)
  Param<T> bias;

 private:
  int in_;
  int out_;
  int rows_ = 0;
  std::vector<T> input_;
};

template <typename T>
struct XentResult {
  T loss = 0;
  std::vector<T> grad;   // same layout as logits
  std::vector<T> probs;  // softmax rows
  int counted = 0;       // frames that contributed (label >= 0)
};

/// Mean (optionally class-weighted) softmax cross-entropy over rows of a
/// (rows, classes) logit matrix. Label -1 marks an ignored row.
template <typename T>
XentResult<T> softmax_xent(std::span<const T> logits, std::span<const int> labels,
                           int classes, std::span<const T> class_weights = {});

}  // namespace ddk
