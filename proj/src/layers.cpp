#include "ddk/layers.h"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <string>

namespace ddk {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

// out[c] += sum over rows of m(r, c), accumulated in row order.
template <typename T>
void add_column_sums(const T* m, std::size_t rows, int cols, T* out) {
  std::vector<T> acc(static_cast<std::size_t>(cols), T(0));
  for (std::size_t r = 0; r < rows; ++r) {
    const T* row = m + r * static_cast<std::size_t>(cols);
    for (int c = 0; c < cols; ++c) acc[static_cast<std::size_t>(c)] += row[c];
  }
  for (int c = 0; c < cols; ++c) out[c] += acc[static_cast<std::size_t>(c)];
}

}  // namespace

ConvSpec ConvSpec::length_preserving(int in, int out, int kernel, int stride,
                                     int dilation) {
  ConvSpec s;
  s.in_channels = in;
  s.out_channels = out;
  s.kernel = kernel;
  s.stride = stride;
  s.dilation = dilation;
  if (s.effective_kernel() < stride) {
    throw std::invalid_argument("length-preserving conv needs (kernel-1)*dilation+1 >= stride");
  }
  const int total = s.effective_kernel() - stride;
  s.pad_left = total / 2;
  s.pad_right = total - s.pad_left;
  return s;
}

// ---------------------------------------------------------------------------
// Conv1d

template <typename T>
Conv1d<T>::Conv1d(const ConvSpec& spec)
    : weight("weight", {spec.out_channels, spec.in_channels, spec.kernel}),
      bias("bias", {spec.out_channels}),
      spec_(spec) {
  if (spec.in_channels < 1 || spec.out_channels < 1 || spec.kernel < 1 ||
      spec.stride < 1 || spec.dilation < 1 || spec.pad_left < 0 ||
      spec.pad_right < 0) {
    throw ShapeError("conv1d: invalid layer specification");
  }
}

template <typename T>
int Conv1d<T>::out_length(int in_length) const {
  const int span = in_length + spec_.pad_left + spec_.pad_right -
                   spec_.effective_kernel();
  if (span < 0) return 0;
  return span / spec_.stride + 1;
}

template <typename T>
void Conv1d<T>::im2col(const T* x, int in_length, int out_length,
                       T* cols) const {
  const int k = spec_.kernel;
  for (int c = 0; c < spec_.in_channels; ++c) {
    const T* xc = x + static_cast<std::size_t>(c) * in_length;
    for (int j = 0; j < k; ++j) {
      T* dst = cols + (static_cast<std::size_t>(c) * k + j) * out_length;
      const int offset = j * spec_.dilation - spec_.pad_left;
      for (int o = 0; o < out_length; ++o) {
        const int pos = o * spec_.stride + offset;
        dst[o] = (pos >= 0 && pos < in_length) ? xc[pos] : T(0);
      }
    }
  }
}

template <typename T>
void Conv1d<T>::col2im(const T* cols, int in_length, int out_length,
                       T* dx) const {
  const int k = spec_.kernel;
  for (int c = 0; c < spec_.in_channels; ++c) {
    T* dxc = dx + static_cast<std::size_t>(c) * in_length;
    for (int j = 0; j < k; ++j) {
      const T* src = cols + (static_cast<std::size_t>(c) * k + j) * out_length;
      const int offset = j * spec_.dilation - spec_.pad_left;
      for (int o = 0; o < out_length; ++o) {
        const int pos = o * spec_.stride + offset;
        if (pos >= 0 && pos < in_length) dxc[pos] += src[o];
      }
    }
  }
}

template <typename T>
Tensor3<T> Conv1d<T>::forward(const Tensor3<T>& x) {
  if (x.channels != spec_.in_channels) {
    throw ShapeError("conv1d: expected " + std::to_string(spec_.in_channels) +
                     " input channels, got " + std::to_string(x.channels));
  }
  input_ = x;
  const int lout = out_length(x.length);
  const int rows = spec_.in_channels * spec_.kernel;
  if (lout == 0) {
    throw ShapeError("conv1d: input of length " + std::to_string(x.length) +
                     " is shorter than the kernel span");
  }
  Tensor3<T> y(x.batch, spec_.out_channels, lout);

  std::vector<T> cols(static_cast<std::size_t>(rows) * lout);
  ConstMatMap<T> w(weight.value.data(), spec_.out_channels, rows);
  Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> b(bias.value.data(),
                                                          spec_.out_channels);
  for (int n = 0; n < x.batch; ++n) {
    im2col(x.row(n, 0), x.length, lout, cols.data());
    ConstMatMap<T> cm(cols.data(), rows, lout);
    MatMap<T> out(y.row(n, 0), spec_.out_channels, lout);
    out.noalias() = w * cm;
    out.colwise() += b;
  }
  return y;
}

template <typename T>
Tensor3<T> Conv1d<T>::backward(const Tensor3<T>& dy) {
  const Tensor3<T>& x = input_;
  const int lout = out_length(x.length);
  if (dy.batch != x.batch || dy.channels != spec_.out_channels ||
      dy.length != lout) {
    throw ShapeError("conv1d backward: gradient shape mismatch");
  }
  const int rows = spec_.in_channels * spec_.kernel;
  Tensor3<T> dx(x.batch, x.channels, x.length);
  if (lout == 0) return dx;

  std::vector<T> cols(static_cast<std::size_t>(rows) * lout);
  std::vector<T> dcols(cols.size());
  ConstMatMap<T> w(weight.value.data(), spec_.out_channels, rows);
  MatMap<T> dw(weight.grad.data(), spec_.out_channels, rows);
  for (int n = 0; n < x.batch; ++n) {
    im2col(x.row(n, 0), x.length, lout, cols.data());
    ConstMatMap<T> cm(cols.data(), rows, lout);
    ConstMatMap<T> g(dy.row(n, 0), spec_.out_channels, lout);
    dw.noalias() += g * cm.transpose();
    for (int c = 0; c < spec_.out_channels; ++c) {
      const T* r = dy.row(n, c);
      T acc = T(0);
      for (int l = 0; l < lout; ++l) acc += r[l];
      bias.grad[c] += acc;
    }
    MatMap<T> dc(dcols.data(), rows, lout);
    dc.noalias() = w.transpose() * g;
    col2im(dcols.data(), x.length, lout, dx.row(n, 0));
  }
  return dx;
}

// ---------------------------------------------------------------------------
// BatchNorm1d

template <typename T>
BatchNorm1d<T>::BatchNorm1d(int channels, double momentum, double eps)
    : weight("weight", {channels}),
      bias("bias", {channels}),
      running_mean("running_mean", {channels}, false),
      running_var("running_var", {channels}, false),
      channels_(channels),
      momentum_(momentum),
      eps_(eps) {
  std::fill(weight.value.begin(), weight.value.end(), T(1));
  std::fill(running_var.value.begin(), running_var.value.end(), T(1));
}

template <typename T>
Tensor3<T> BatchNorm1d<T>::forward(const Tensor3<T>& x, Mode mode) {
  using Acc = acc_t<T>;
  if (x.channels != channels_) {
    throw ShapeError("batchnorm1d: channel mismatch");
  }
  mode_ = mode;
  batch_ = x.batch;
  length_ = x.length;
  Tensor3<T> y(x.batch, x.channels, x.length);
  normalized_.assign(x.size(), T(0));
  inv_std_.assign(channels_, 0.0);
  const std::size_t count = static_cast<std::size_t>(x.batch) * x.length;

  for (int c = 0; c < channels_; ++c) {
    Acc mean = 0.0;
    Acc var = 0.0;
    if (mode == Mode::Train && count > 0) {
      Acc sum = 0.0;
      for (int n = 0; n < x.batch; ++n) {
        const T* r = x.row(n, c);
        for (int l = 0; l < x.length; ++l) sum += r[l];
      }
      mean = sum / static_cast<Acc>(count);
      Acc sq = 0.0;
      for (int n = 0; n < x.batch; ++n) {
        const T* r = x.row(n, c);
        for (int l = 0; l < x.length; ++l) {
          const Acc d = r[l] - mean;
          sq += d * d;
        }
      }
      var = sq / static_cast<Acc>(count);
      const Acc unbiased = count > 1 ? sq / static_cast<Acc>(count - 1) : var;
      running_mean.value[c] = static_cast<T>(
          (1.0 - momentum_) * running_mean.value[c] + momentum_ * mean);
      running_var.value[c] = static_cast<T>(
          (1.0 - momentum_) * running_var.value[c] + momentum_ * unbiased);
    } else {
      mean = running_mean.value[c];
      var = running_var.value[c];
    }
    const Acc inv = 1.0 / std::sqrt(var + eps_);
    inv_std_[c] = inv;
    const T scale = weight.value[c];
    const T shift = bias.value[c];
    for (int n = 0; n < x.batch; ++n) {
      const T* r = x.row(n, c);
      T* out = y.row(n, c);
      T* nr = normalized_.data() + (r - x.data.data());
      for (int l = 0; l < x.length; ++l) {
        const T h = static_cast<T>((r[l] - mean) * inv);
        nr[l] = h;
        out[l] = scale * h + shift;
      }
    }
  }
  return y;
}

template <typename T>
Tensor3<T> BatchNorm1d<T>::backward(const Tensor3<T>& dy) {
  using Acc = acc_t<T>;
  if (dy.channels != channels_ || dy.batch != batch_ || dy.length != length_) {
    throw ShapeError("batchnorm1d backward: gradient shape mismatch");
  }
  Tensor3<T> dx(batch_, channels_, length_);
  const Acc count = static_cast<Acc>(batch_) * length_;
  for (int c = 0; c < channels_; ++c) {
    Acc sum_dy = 0.0;
    Acc sum_dy_h = 0.0;
    for (int n = 0; n < batch_; ++n) {
      const T* g = dy.row(n, c);
      const T* h = normalized_.data() + (g - dy.data.data());
      for (int l = 0; l < length_; ++l) {
        sum_dy += g[l];
        sum_dy_h += static_cast<Acc>(g[l]) * h[l];
      }
    }
    weight.grad[c] += static_cast<T>(sum_dy_h);
    bias.grad[c] += static_cast<T>(sum_dy);
    const Acc gamma = weight.value[c];
    const Acc inv = inv_std_[c];
    for (int n = 0; n < batch_; ++n) {
      const T* g = dy.row(n, c);
      const T* h = normalized_.data() + (g - dy.data.data());
      T* out = dx.row(n, c);
      if (mode_ == Mode::Train) {
        const Acc k = gamma * inv / count;
        for (int l = 0; l < length_; ++l) {
          out[l] = static_cast<T>(
              k * (count * g[l] - sum_dy - h[l] * sum_dy_h));
        }
      } else {
        const T k = static_cast<T>(gamma * inv);
        for (int l = 0; l < length_; ++l) out[l] = k * g[l];
      }
    }
  }
  return dx;
}

// ---------------------------------------------------------------------------
// Elementwise

template <typename T>
void LeakyRelu<T>::forward(std::vector<T>& x) {
  negative_.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const bool neg = x[i] < T(0);
    negative_[i] = neg;
    if (neg) x[i] *= slope_;
  }
}

template <typename T>
void LeakyRelu<T>::backward(std::vector<T>& dy) const {
  if (dy.size() != negative_.size()) {
    throw ShapeError("leaky_relu backward: gradient shape mismatch");
  }
  for (std::size_t i = 0; i < dy.size(); ++i) {
    if (negative_[i]) dy[i] *= slope_;
  }
}

template <typename T>
Dropout<T>::Dropout(double p) : p_(p) {
  if (!(p >= 0.0 && p < 1.0)) {
    throw std::invalid_argument("dropout: p must lie in [0, 1)");
  }
}

template <typename T>
void Dropout<T>::forward(std::vector<T>& x, Mode mode, Rng& rng) {
  active_ = mode == Mode::Train && p_ > 0.0;
  if (!active_) return;
  const T keep_scale = static_cast<T>(1.0 / (1.0 - p_));
  mask_.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    mask_[i] = rng.uniform() < p_ ? T(0) : keep_scale;
    x[i] *= mask_[i];
  }
}

template <typename T>
void Dropout<T>::backward(std::vector<T>& dy) const {
  if (!active_) return;
  if (dy.size() != mask_.size()) {
    throw ShapeError("dropout backward: gradient shape mismatch");
  }
  for (std::size_t i = 0; i < dy.size(); ++i) dy[i] *= mask_[i];
}

// ---------------------------------------------------------------------------
// BiLstm

template <typename T>
BiLstm<T>::BiLstm(int input_size, int hidden_size)
    : input_size_(input_size), hidden_(hidden_size) {
  if (input_size < 1 || hidden_size < 1) {
    throw ShapeError("bilstm: sizes must be positive");
  }
  const char* tag[2] = {"fwd", "bwd"};
  for (int d = 0; d < 2; ++d) {
    w_ih[d] = Param<T>(std::string("w_ih_") + tag[d], {4 * hidden_, input_size_});
    w_hh[d] = Param<T>(std::string("w_hh_") + tag[d], {4 * hidden_, hidden_});
    b[d] = Param<T>(std::string("b_") + tag[d], {4 * hidden_});
  }
}

template <typename T>
void BiLstm<T>::run_direction(int dir, const Sequence<T>& x, Sequence<T>& y) {
  const int steps = x.steps;
  const int batch = x.batch;
  const int h = hidden_;
  const std::size_t rows = static_cast<std::size_t>(steps) * batch;
  Cache& cache = cache_[dir];
  cache.gates.assign(rows * 4 * h, T(0));
  cache.cell.assign(rows * h, T(0));
  cache.tanh_cell.assign(rows * h, T(0));
  cache.hidden.assign(rows * h, T(0));

  ConstMatMap<T> xin(x.data.data(), static_cast<Eigen::Index>(rows), input_size_);
  ConstMatMap<T> wih(w_ih[dir].value.data(), 4 * h, input_size_);
  ConstMatMap<T> whh(w_hh[dir].value.data(), 4 * h, h);
  Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> bias(b[dir].value.data(),
                                                             4 * h);
  MatMap<T> gates(cache.gates.data(), static_cast<Eigen::Index>(rows), 4 * h);
  gates.noalias() = xin * wih.transpose();
  gates.rowwise() += bias;

  RowMat<T> zero_state = RowMat<T>::Zero(batch, h);
  for (int s = 0; s < steps; ++s) {
    const int t = dir == 0 ? s : steps - 1 - s;
    const int prev = dir == 0 ? t - 1 : t + 1;
    const bool has_prev = s > 0;
    MatMap<T> g(cache.gates.data() + static_cast<std::size_t>(t) * batch * 4 * h,
                batch, 4 * h);
    if (has_prev) {
      ConstMatMap<T> hprev(
          cache.hidden.data() + static_cast<std::size_t>(prev) * batch * h, batch, h);
      g.noalias() += hprev * whh.transpose();
    }
    T* cell = cache.cell.data() + static_cast<std::size_t>(t) * batch * h;
    T* tc = cache.tanh_cell.data() + static_cast<std::size_t>(t) * batch * h;
    T* hid = cache.hidden.data() + static_cast<std::size_t>(t) * batch * h;
    const T* cprev = has_prev
        ? cache.cell.data() + static_cast<std::size_t>(prev) * batch * h
        : zero_state.data();
    auto in_gate = g.leftCols(h).array();
    auto forget_gate = g.middleCols(h, h).array();
    auto cell_gate = g.middleCols(2 * h, h).array();
    auto out_gate = g.rightCols(h).array();
    in_gate = ((-in_gate).exp() + T(1)).inverse();
    forget_gate = ((-forget_gate).exp() + T(1)).inverse();
    cell_gate = cell_gate.tanh();
    out_gate = ((-out_gate).exp() + T(1)).inverse();
    MatMap<T> cm(cell, batch, h);
    MatMap<T> tcm(tc, batch, h);
    MatMap<T> hm(hid, batch, h);
    ConstMatMap<T> cpm(cprev, batch, h);
    cm.array() = forget_gate * cpm.array() + in_gate * cell_gate;
    tcm.array() = cm.array().tanh();
    hm.array() = out_gate * tcm.array();
    for (int n = 0; n < batch; ++n) {
      T* out = y.step(t) + static_cast<std::size_t>(n) * 2 * h + dir * h;
      std::copy_n(hid + static_cast<std::size_t>(n) * h, h, out);
    }
  }
}

template <typename T>
Sequence<T> BiLstm<T>::forward(const Sequence<T>& x) {
  if (x.features != input_size_) {
    throw ShapeError("bilstm: expected " + std::to_string(input_size_) +
                     " input features, got " + std::to_string(x.features));
  }
  input_ = x;
  Sequence<T> y(x.steps, x.batch, 2 * hidden_);
  if (x.steps == 0) return y;
  run_direction(0, x, y);
  run_direction(1, x, y);
  return y;
}

template <typename T>
void BiLstm<T>::back_direction(int dir, const Sequence<T>& dy, Sequence<T>& dx) {
  const Sequence<T>& x = input_;
  const int steps = x.steps;
  const int batch = x.batch;
  const int h = hidden_;
  const std::size_t rows = static_cast<std::size_t>(steps) * batch;
  const Cache& cache = cache_[dir];

  std::vector<T> dgates(rows * 4 * h, T(0));
  RowMat<T> dh_next = RowMat<T>::Zero(batch, h);
  RowMat<T> dc_next = RowMat<T>::Zero(batch, h);
  ConstMatMap<T> whh(w_hh[dir].value.data(), 4 * h, h);
  MatMap<T> dwhh(w_hh[dir].grad.data(), 4 * h, h);

  for (int s = steps - 1; s >= 0; --s) {
    const int t = dir == 0 ? s : steps - 1 - s;
    const int prev = dir == 0 ? t - 1 : t + 1;
    const bool has_prev = s > 0;
    const std::size_t base = static_cast<std::size_t>(t) * batch;
    const T* gates = cache.gates.data() + base * 4 * h;
    const T* tc = cache.tanh_cell.data() + base * h;
    const T* cprev = has_prev
        ? cache.cell.data() + static_cast<std::size_t>(prev) * batch * h
        : nullptr;
    T* dg = dgates.data() + base * 4 * h;
    for (int n = 0; n < batch; ++n) {
      const T* gr = gates + static_cast<std::size_t>(n) * 4 * h;
      const T* up = dy.step(t) + static_cast<std::size_t>(n) * 2 * h + dir * h;
      T* dgr = dg + static_cast<std::size_t>(n) * 4 * h;
      for (int j = 0; j < h; ++j) {
        const std::size_t k = static_cast<std::size_t>(n) * h + j;
        const T i_g = gr[j];
        const T f_g = gr[h + j];
        const T c_g = gr[2 * h + j];
        const T o_g = gr[3 * h + j];
        const T dh = up[j] + dh_next.data()[k];
        const T d_o = dh * tc[k];
        const T dc = dh * o_g * (T(1) - tc[k] * tc[k]) + dc_next.data()[k];
        const T cp = cprev ? cprev[k] : T(0);
        dgr[j] = dc * c_g * i_g * (T(1) - i_g);
        dgr[h + j] = dc * cp * f_g * (T(1) - f_g);
        dgr[2 * h + j] = dc * i_g * (T(1) - c_g * c_g);
        dgr[3 * h + j] = d_o * o_g * (T(1) - o_g);
        dc_next.data()[k] = dc * f_g;
      }
    }
    ConstMatMap<T> dgm(dg, batch, 4 * h);
    if (has_prev) {
      ConstMatMap<T> hprev(
          cache.hidden.data() + static_cast<std::size_t>(prev) * batch * h, batch, h);
      dwhh.noalias() += dgm.transpose() * hprev;
      dh_next.noalias() = dgm * whh;
    } else {
      dh_next.setZero();
    }
  }

  ConstMatMap<T> dgall(dgates.data(), static_cast<Eigen::Index>(rows), 4 * h);
  ConstMatMap<T> xin(x.data.data(), static_cast<Eigen::Index>(rows), input_size_);
  ConstMatMap<T> wih(w_ih[dir].value.data(), 4 * h, input_size_);
  MatMap<T> dwih(w_ih[dir].grad.data(), 4 * h, input_size_);
  dwih.noalias() += dgall.transpose() * xin;
  add_column_sums(dgates.data(), rows, 4 * h, b[dir].grad.data());
  MatMap<T> dxm(dx.data.data(), static_cast<Eigen::Index>(rows), input_size_);
  dxm.noalias() += dgall * wih;
}

template <typename T>
Sequence<T> BiLstm<T>::backward(const Sequence<T>& dy) {
  if (dy.steps != input_.steps || dy.batch != input_.batch ||
      dy.features != 2 * hidden_) {
    throw ShapeError("bilstm backward: gradient shape mismatch");
  }
  Sequence<T> dx(input_.steps, input_.batch, input_size_);
  if (input_.steps == 0) return dx;
  back_direction(0, dy, dx);
  back_direction(1, dy, dx);
  return dx;
}

// ---------------------------------------------------------------------------
// Linear

template <typename T>
Linear<T>::Linear(int in_features, int out_features)
    : weight("weight", {out_features, in_features}),
      bias("bias", {out_features}),
      in_(in_features),
      out_(out_features) {
  if (in_features < 1 || out_features < 1) {
    throw ShapeError("linear: sizes must be positive");
  }
}

template <typename T>
std::vector<T> Linear<T>::forward(const std::vector<T>& x, int rows) {
  if (x.size() != static_cast<std::size_t>(rows) * in_) {
    throw ShapeError("linear: input is not (rows, " + std::to_string(in_) + ")");
  }
  input_ = x;
  rows_ = rows;
  std::vector<T> y(static_cast<std::size_t>(rows) * out_);
  ConstMatMap<T> xm(x.data(), rows, in_);
  ConstMatMap<T> w(weight.value.data(), out_, in_);
  Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> b(bias.value.data(), out_);
  MatMap<T> ym(y.data(), rows, out_);
  ym.noalias() = xm * w.transpose();
  ym.rowwise() += b;
  return y;
}

template <typename T>
std::vector<T> Linear<T>::backward(const std::vector<T>& dy) {
  if (dy.size() != static_cast<std::size_t>(rows_) * out_) {
    throw ShapeError("linear backward: gradient shape mismatch");
  }
  std::vector<T> dx(static_cast<std::size_t>(rows_) * in_);
  ConstMatMap<T> g(dy.data(), rows_, out_);
  ConstMatMap<T> xm(input_.data(), rows_, in_);
  ConstMatMap<T> w(weight.value.data(), out_, in_);
  MatMap<T> dw(weight.grad.data(), out_, in_);
  dw.noalias() += g.transpose() * xm;
  add_column_sums(dy.data(), static_cast<std::size_t>(rows_), out_, bias.grad.data());
  MatMap<T> dxm(dx.data(), rows_, in_);
  dxm.noalias() = g * w;
  return dx;
}

// ---------------------------------------------------------------------------
// Loss

template <typename T>
XentResult<T> softmax_xent(std::span<const T> logits, std::span<const int> labels,
                           int classes, std::span<const T> class_weights) {
  using Acc = acc_t<T>;
  if (classes < 1 || logits.size() != labels.size() * classes) {
    throw ShapeError("softmax_xent: logits are not (rows, classes)");
  }
  if (!class_weights.empty() &&
      class_weights.size() != static_cast<std::size_t>(classes)) {
    throw ShapeError("softmax_xent: one weight per class required");
  }
  XentResult<T> r;
  r.grad.assign(logits.size(), T(0));
  r.probs.assign(logits.size(), T(0));
  for (int label : labels) {
    if (label < -1 || label >= classes) {
      throw LabelError("softmax_xent: label " + std::to_string(label) +
                       " outside [0, " + std::to_string(classes) + ")");
    }
    if (label >= 0) ++r.counted;
  }
  Acc total = 0.0;
  const Acc norm = r.counted > 0 ? Acc(1) / r.counted : Acc(0);
  for (std::size_t n = 0; n < labels.size(); ++n) {
    const T* z = logits.data() + n * classes;
    T* p = r.probs.data() + n * classes;
    Acc zmax = z[0];
    for (int k = 1; k < classes; ++k) zmax = std::max<Acc>(zmax, z[k]);
    Acc sum = 0.0;
    for (int k = 0; k < classes; ++k) sum += std::exp(z[k] - zmax);
    const Acc log_sum = zmax + std::log(sum);
    for (int k = 0; k < classes; ++k) p[k] = static_cast<T>(std::exp(z[k] - log_sum));
    const int label = labels[n];
    if (label < 0) continue;
    const Acc w = class_weights.empty() ? 1.0 : class_weights[label];
    total += w * (log_sum - z[label]);
    T* g = r.grad.data() + n * classes;
    for (int k = 0; k < classes; ++k) {
      const Acc onehot = k == label ? 1.0 : 0.0;
      g[k] = static_cast<T>(w * norm * (std::exp(z[k] - log_sum) - onehot));
    }
  }
  r.loss = static_cast<T>(total * norm);
  return r;
}

template class Conv1d<float>;
template class Conv1d<double>;
template class Conv1d<long double>;
template class BatchNorm1d<float>;
template class BatchNorm1d<double>;
template class BatchNorm1d<long double>;
template class LeakyRelu<float>;
template class LeakyRelu<double>;
template class LeakyRelu<long double>;
template class Dropout<float>;
template class Dropout<double>;
template class Dropout<long double>;
template class BiLstm<float>;
template class BiLstm<double>;
template class BiLstm<long double>;
template class Linear<float>;
template class Linear<double>;
template class Linear<long double>;
template XentResult<float> softmax_xent<float>(std::span<const float>,
                                               std::span<const int>, int,
                                               std::span<const float>);
template XentResult<double> softmax_xent<double>(std::span<const double>,
                                                 std::span<const int>, int,
                                                 std::span<const double>);
template XentResult<long double> softmax_xent<long double>(std::span<const long double>,
                                                           std::span<const int>, int,
                                                           std::span<const long double>);

}  // namespace ddk
