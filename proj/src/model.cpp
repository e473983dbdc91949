#include "ddk/model.h"

#include <algorithm>
#include <cmath>

namespace ddk {

std::string architecture_name(Architecture arch) {
  return arch == Architecture::Lstm ? "lstm" : "cnn";
}

Architecture parse_architecture(const std::string& name) {
  if (name == "lstm") return Architecture::Lstm;
  if (name == "cnn") return Architecture::Cnn;
  throw ConfigError("unknown architecture '" + name + "' (expected lstm or cnn)");
}

ModelConfig ModelConfig::default_lstm() {
  ModelConfig c;
  c.architecture = Architecture::Lstm;
  c.conv = {{32, 16, 4, 1}, {64, 5, 2, 1}, {64, 5, 2, 1}, {128, 3, 1, 1}, {128, 3, 1, 1}};
  c.lstm_hidden = 128;
  c.lstm_layers = 2;
  c.fc_hidden = 64;
  return c;
}

ModelConfig ModelConfig::default_cnn() {
  ModelConfig c;
  c.architecture = Architecture::Cnn;
  c.conv = {{32, 16, 4, 1},  {64, 5, 2, 1},   {64, 5, 2, 1},   {128, 3, 1, 2},
            {128, 3, 1, 4},  {128, 3, 1, 8},  {128, 3, 1, 16}, {256, 3, 1, 32},
            {256, 3, 1, 1},  {256, 3, 1, 1}};
  c.lstm_hidden = 0;
  c.lstm_layers = 0;
  c.fc_hidden = 64;
  return c;
}

int ModelConfig::stride_product() const {
  int p = 1;
  for (const auto& l : conv) p *= l.stride;
  return p;
}

int ModelConfig::receptive_field() const {
  int rf = 1;
  int jump = 1;
  for (const auto& l : conv) {
    rf += l.dilation * (l.kernel - 1) * jump;
    jump *= l.stride;
  }
  return rf;
}

void ModelConfig::validate(bool standard_depth) const {
  if (conv.empty()) throw ConfigError("model config: no conv layers");
  for (const auto& l : conv) {
    if (l.channels < 1 || l.kernel < 1 || l.stride < 1 || l.dilation < 1) {
      throw ConfigError("model config: conv layer sizes must be positive");
    }
    if ((l.kernel - 1) * l.dilation + 1 < l.stride) {
      throw ConfigError("model config: conv kernel span must be at least its stride");
    }
  }
  if (frame_ms != 1) throw ConfigError("model config: frame_ms must be 1");
  const int expected = sample_rate_hz * frame_ms / 1000;
  if (stride_product() != expected) {
    throw ConfigError("model config: conv stride product is " +
                      std::to_string(stride_product()) + ", must be " +
                      std::to_string(expected) + " (one frame per ms)");
  }
  if (fc_hidden < 1) throw ConfigError("model config: fc_hidden must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    throw ConfigError("model config: dropout must lie in [0, 1)");
  }
  if (architecture == Architecture::Lstm) {
    if (lstm_hidden < 1 || lstm_layers < 1) {
      throw ConfigError("model config: lstm architecture needs hidden size and layers");
    }
  }
  if (standard_depth) {
    if (architecture == Architecture::Lstm &&
        (conv.size() != 5 || lstm_layers != 2)) {
      throw ConfigError(
          "model config: lstm architecture has exactly 5 conv layers and 2 "
          "BiLSTM layers");
    }
    if (architecture == Architecture::Cnn && conv.size() != 10) {
      throw ConfigError("model config: cnn architecture has exactly 10 conv layers, got " +
                        std::to_string(conv.size()));
    }
  }
}

template <typename T>
struct Model<T>::Layers {
  struct Block {
    Conv1d<T> conv;
    BatchNorm1d<T> bn;
    LeakyRelu<T> act;
    Dropout<T> drop;
  };
  std::vector<Block> blocks;
  std::vector<BiLstm<T>> lstms;
  std::vector<Dropout<T>> lstm_drops;
  Linear<T> fc1;
  LeakyRelu<T> fc_act;
  Dropout<T> fc_drop;
  Linear<T> fc2;
  int channels = 0;  // extractor output channels

  Layers(const ModelConfig& cfg, int feature_dim)
      : fc1(feature_dim, cfg.fc_hidden),
        fc_act(cfg.leaky_slope),
        fc_drop(cfg.dropout),
        fc2(cfg.fc_hidden, kNumClasses) {}
};

namespace {

template <typename T>
void init_uniform(Param<T>& p, double bound, Rng& rng) {
  for (auto& v : p.value) v = static_cast<T>(rng.uniform(-bound, bound));
}

}  // namespace

template <typename T>
Model<T>::Model(const ModelConfig& cfg, std::uint64_t seed, bool standard_depth)
    : cfg_(cfg) {
  cfg_.validate(standard_depth);
  const int last = cfg_.conv.back().channels;
  const int feature_dim =
      cfg_.architecture == Architecture::Lstm ? 2 * cfg_.lstm_hidden : last;
  layers_ = std::make_unique<Layers>(cfg_, feature_dim);
  layers_->channels = last;

  Rng rng(seed);
  int in = 1;
  for (std::size_t i = 0; i < cfg_.conv.size(); ++i) {
    const auto& l = cfg_.conv[i];
    auto spec = ConvSpec::length_preserving(in, l.channels, l.kernel, l.stride, l.dilation);
    typename Layers::Block block{Conv1d<T>(spec), BatchNorm1d<T>(l.channels),
                                 LeakyRelu<T>(cfg_.leaky_slope), Dropout<T>(cfg_.dropout)};
    const int fan_in = in * l.kernel;
    init_uniform(block.conv.weight, std::sqrt(6.0 / fan_in), rng);
    init_uniform(block.conv.bias, 1.0 / std::sqrt(fan_in), rng);
    const std::string prefix = "conv" + std::to_string(i) + ".";
    for (Param<T>* p : block.conv.params()) p->name = prefix + p->name;
    for (Param<T>* p : block.bn.params()) p->name = "bn" + std::to_string(i) + "." + p->name;
    layers_->blocks.push_back(std::move(block));
    in = l.channels;
  }
  if (cfg_.architecture == Architecture::Lstm) {
    for (int i = 0; i < cfg_.lstm_layers; ++i) {
      BiLstm<T> lstm(in, cfg_.lstm_hidden);
      const double bound = 1.0 / std::sqrt(cfg_.lstm_hidden);
      for (Param<T>* p : lstm.params()) {
        init_uniform(*p, bound, rng);
        p->name = "lstm" + std::to_string(i) + "." + p->name;
      }
      layers_->lstms.push_back(std::move(lstm));
      layers_->lstm_drops.emplace_back(cfg_.dropout);
      in = 2 * cfg_.lstm_hidden;
    }
  }
  for (auto* fc : {&layers_->fc1, &layers_->fc2}) {
    init_uniform(fc->weight, std::sqrt(6.0 / fc->in_features()), rng);
    init_uniform(fc->bias, 1.0 / std::sqrt(fc->in_features()), rng);
  }
  for (Param<T>* p : layers_->fc1.params()) p->name = "fc1." + p->name;
  for (Param<T>* p : layers_->fc2.params()) p->name = "fc2." + p->name;
}

template <typename T>
Model<T>::Model(Model&&) noexcept = default;
template <typename T>
Model<T>& Model<T>::operator=(Model&&) noexcept = default;
template <typename T>
Model<T>::~Model() = default;

template <typename T>
int Model<T>::frames_for(int samples) const {
  int len = samples;
  for (const auto& b : layers_->blocks) len = b.conv.out_length(len);
  return len;
}

template <typename T>
std::vector<T> Model<T>::forward(const Tensor3<T>& audio, Mode mode, Rng* rng) {
  if (audio.channels != 1) throw ShapeError("model forward: expected mono input");
  if (mode == Mode::Train && rng == nullptr && cfg_.dropout > 0.0) {
    throw std::invalid_argument("model forward: train mode needs an rng");
  }
  Rng unused(0);
  Rng& r = rng ? *rng : unused;
  Layers& L = *layers_;

  Tensor3<T> h = audio;
  for (auto& b : L.blocks) {
    h = b.conv.forward(h);
    h = b.bn.forward(h, mode);
    b.act.forward(h.data);
    b.drop.forward(h.data, mode, r);
  }
  const int batch = h.batch;
  const int frames = h.length;
  const int channels = h.channels;
  batch_ = batch;
  frames_ = frames;

  std::vector<T> rows;
  int features = channels;
  if (cfg_.architecture == Architecture::Lstm) {
    Sequence<T> seq(frames, batch, channels);
    for (int n = 0; n < batch; ++n) {
      for (int c = 0; c < channels; ++c) {
        const T* src = h.row(n, c);
        for (int t = 0; t < frames; ++t) {
          seq.step(t)[static_cast<std::size_t>(n) * channels + c] = src[t];
        }
      }
    }
    for (std::size_t i = 0; i < L.lstms.size(); ++i) {
      seq = L.lstms[i].forward(seq);
      L.lstm_drops[i].forward(seq.data, mode, r);
    }
    features = seq.features;
    rows = std::move(seq.data);
  } else {
    rows.resize(static_cast<std::size_t>(batch) * frames * channels);
    for (int n = 0; n < batch; ++n) {
      for (int c = 0; c < channels; ++c) {
        const T* src = h.row(n, c);
        for (int t = 0; t < frames; ++t) {
          rows[(static_cast<std::size_t>(n) * frames + t) * channels + c] = src[t];
        }
      }
    }
  }
  (void)features;
  const int nrows = batch * frames;
  std::vector<T> z = L.fc1.forward(rows, nrows);
  L.fc_act.forward(z);
  L.fc_drop.forward(z, mode, r);
  std::vector<T> logits = L.fc2.forward(z, nrows);

  if (cfg_.architecture == Architecture::Lstm) {
    // time-major rows -> (batch, frames, classes)
    std::vector<T> out(logits.size());
    for (int t = 0; t < frames; ++t) {
      for (int n = 0; n < batch; ++n) {
        std::copy_n(logits.data() + (static_cast<std::size_t>(t) * batch + n) * kNumClasses,
                    kNumClasses,
                    out.data() + (static_cast<std::size_t>(n) * frames + t) * kNumClasses);
      }
    }
    return out;
  }
  return logits;
}

template <typename T>
void Model<T>::backward(const std::vector<T>& dlogits) {
  Layers& L = *layers_;
  const int batch = batch_;
  const int frames = frames_;
  const int channels = L.channels;
  if (dlogits.size() != static_cast<std::size_t>(batch) * frames * kNumClasses) {
    throw ShapeError("model backward: gradient shape mismatch");
  }
  std::vector<T> g = dlogits;
  if (cfg_.architecture == Architecture::Lstm) {
    for (int t = 0; t < frames; ++t) {
      for (int n = 0; n < batch; ++n) {
        std::copy_n(dlogits.data() + (static_cast<std::size_t>(n) * frames + t) * kNumClasses,
                    kNumClasses,
                    g.data() + (static_cast<std::size_t>(t) * batch + n) * kNumClasses);
      }
    }
  }
  std::vector<T> dz = L.fc2.backward(g);
  L.fc_drop.backward(dz);
  L.fc_act.backward(dz);
  std::vector<T> drows = L.fc1.backward(dz);

  Tensor3<T> dh(batch, channels, frames);
  if (cfg_.architecture == Architecture::Lstm) {
    Sequence<T> dseq(frames, batch, L.fc1.in_features());
    dseq.data = std::move(drows);
    for (std::size_t i = L.lstms.size(); i-- > 0;) {
      L.lstm_drops[i].backward(dseq.data);
      dseq = L.lstms[i].backward(dseq);
    }
    for (int n = 0; n < batch; ++n) {
      for (int c = 0; c < channels; ++c) {
        T* dst = dh.row(n, c);
        for (int t = 0; t < frames; ++t) {
          dst[t] = dseq.step(t)[static_cast<std::size_t>(n) * channels + c];
        }
      }
    }
  } else {
    for (int n = 0; n < batch; ++n) {
      for (int c = 0; c < channels; ++c) {
        T* dst = dh.row(n, c);
        for (int t = 0; t < frames; ++t) {
          dst[t] = drows[(static_cast<std::size_t>(n) * frames + t) * channels + c];
        }
      }
    }
  }
  for (std::size_t i = L.blocks.size(); i-- > 0;) {
    auto& b = L.blocks[i];
    b.drop.backward(dh.data);
    b.act.backward(dh.data);
    dh = b.bn.backward(dh);
    dh = b.conv.backward(dh);
  }
}

template <typename T>
std::vector<Param<T>*> Model<T>::params() {
  std::vector<Param<T>*> out;
  Layers& L = *layers_;
  for (auto& b : L.blocks) {
    for (auto* p : b.conv.params()) out.push_back(p);
    for (auto* p : b.bn.params()) out.push_back(p);
  }
  for (auto& l : L.lstms) {
    for (auto* p : l.params()) out.push_back(p);
  }
  for (auto* p : L.fc1.params()) out.push_back(p);
  for (auto* p : L.fc2.params()) out.push_back(p);
  return out;
}

template <typename T>
std::vector<const Param<T>*> Model<T>::params() const {
  auto mutable_params = const_cast<Model<T>*>(this)->params();
  return {mutable_params.begin(), mutable_params.end()};
}

template <typename T>
std::vector<Param<T>*> Model<T>::trainable_params() {
  std::vector<Param<T>*> out;
  for (auto* p : params()) {
    if (p->trainable) out.push_back(p);
  }
  return out;
}

template <typename T>
void Model<T>::zero_grad() {
  for (auto* p : params()) p->zero_grad();
}

template <typename T>
std::size_t Model<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto* p : params()) {
    if (p->trainable) n += p->size();
  }
  return n;
}

template <typename T>
std::vector<unsigned char> Model<T>::activation_pattern() const {
  std::vector<unsigned char> out;
  for (const auto& b : layers_->blocks) {
    const auto& m = b.act.negative_mask();
    out.insert(out.end(), m.begin(), m.end());
  }
  const auto& m = layers_->fc_act.negative_mask();
  out.insert(out.end(), m.begin(), m.end());
  return out;
}

template <typename From, typename To>
void copy_parameters(const Model<From>& from, Model<To>& to) {
  auto src = from.params();
  auto dst = to.params();
  if (src.size() != dst.size()) throw ShapeError("copy_parameters: layer count differs");
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (src[i]->name != dst[i]->name || src[i]->shape != dst[i]->shape) {
      throw ShapeError("copy_parameters: '" + src[i]->name + "' does not match '" +
                       dst[i]->name + "'");
    }
    std::transform(src[i]->value.begin(), src[i]->value.end(), dst[i]->value.begin(),
                   [](From v) { return static_cast<To>(v); });
  }
}

template class Model<float>;
template class Model<double>;
template class Model<long double>;
template void copy_parameters<float, double>(const Model<float>&, Model<double>&);
template void copy_parameters<double, float>(const Model<double>&, Model<float>&);
template void copy_parameters<float, float>(const Model<float>&, Model<float>&);
template void copy_parameters<double, double>(const Model<double>&, Model<double>&);
template void copy_parameters<float, long double>(const Model<float>&, Model<long double>&);
template void copy_parameters<double, long double>(const Model<double>&, Model<long double>&);

Model<float> build_model(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate(true);
  return Model<float>(cfg, seed, true);
}

namespace {

Label argmax_label(const float* logits) {
  int best = 0;
  for (int k = 1; k < kNumClasses; ++k) {
    if (logits[k] > logits[best]) best = k;
  }
  return static_cast<Label>(best);
}

}  // namespace

std::vector<FrameLabelSequence> forward_windows(
    Model<float>& model, const std::vector<std::vector<float>>& windows) {
  std::vector<FrameLabelSequence> out(windows.size());
  if (windows.empty()) return out;
  const std::size_t samples = windows.front().size();
  for (const auto& w : windows) {
    if (w.size() != samples) throw ShapeError("forward_windows: windows differ in length");
  }
  const int stride = model.config().stride_product();
  const int frames = static_cast<int>(samples) / stride;
  const int rf = model.config().receptive_field();
  bool padded = false;
  std::size_t length = samples;
  if (static_cast<int>(samples) < rf) {
    length = static_cast<std::size_t>((rf + stride - 1) / stride) * stride;
    padded = true;
  }
  if (frames == 0) {
    for (auto& f : out) f.padded = padded;
    return out;
  }
  Tensor3<float> x(static_cast<int>(windows.size()), 1, static_cast<int>(length));
  for (std::size_t n = 0; n < windows.size(); ++n) {
    std::copy(windows[n].begin(), windows[n].end(), x.row(static_cast<int>(n), 0));
  }
  const std::vector<float> logits = model.forward(x, Mode::Eval);
  const int produced = model.last_frames();
  for (std::size_t n = 0; n < windows.size(); ++n) {
    FrameLabelSequence& f = out[n];
    f.padded = padded;
    f.labels.resize(static_cast<std::size_t>(frames));
    f.probs.resize(static_cast<std::size_t>(frames) * kNumClasses);
    for (int t = 0; t < frames; ++t) {
      const float* z = logits.data() + (n * produced + t) * kNumClasses;
      f.labels[static_cast<std::size_t>(t)] = argmax_label(z);
      const float zmax = std::max({z[0], z[1], z[2]});
      double sum = 0.0;
      for (int k = 0; k < kNumClasses; ++k) sum += std::exp(double(z[k]) - zmax);
      for (int k = 0; k < kNumClasses; ++k) {
        f.probs[static_cast<std::size_t>(t) * kNumClasses + k] =
            static_cast<float>(std::exp(double(z[k]) - zmax) / sum);
      }
    }
  }
  return out;
}

FrameLabelSequence forward_window(Model<float>& model, const std::vector<float>& samples) {
  return forward_windows(model, {samples}).front();
}

}  // namespace ddk
