#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "ddk/layers.h"
#include "ddk/random.h"
#include "ddk/segments.h"
#include "ddk/tensor.h"

namespace ddk {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Architecture { Lstm, Cnn };

std::string architecture_name(Architecture arch);
Architecture parse_architecture(const std::string& name);

struct ConvLayerConfig {
  int channels = 0;
  int kernel = 1;
  int stride = 1;
  int dilation = 1;

  bool operator==(const ConvLayerConfig&) const = default;
};

struct ModelConfig {
  Architecture architecture = Architecture::Lstm;
  std::vector<ConvLayerConfig> conv;
  int lstm_hidden = 128;
  int lstm_layers = 2;
  int fc_hidden = 64;
  double dropout = 0.1;
  double leaky_slope = 0.01;
  int sample_rate_hz = 16000;
  int frame_ms = 1;

  /// 5 conv + 2 BiLSTM(128) + FC 256->64->3.
  static ModelConfig default_lstm();
  /// 10 dilated conv + FC 256->64->3.
  static ModelConfig default_cnn();

  int stride_product() const;
  /// Input samples seen by one output frame of the conv stack.
  int receptive_field() const;

  /// Throws ConfigError. `standard_depth` also enforces the default layer
  /// counts (5 conv + 2 BiLSTM, or 10 conv); scaled-down clones turn it off.
  void validate(bool standard_depth = true) const;

  bool operator==(const ModelConfig&) const = default;
};

/// Conv+BiLSTM or dilated-conv frame classifier over raw 16 kHz audio.
template <typename T>
class Model {
 public:
  explicit Model(const ModelConfig& cfg, std::uint64_t seed = 0,
                 bool standard_depth = true);

  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;
  Model(Model&&) noexcept;
  Model& operator=(Model&&) noexcept;
  ~Model();

  const ModelConfig& config() const { return cfg_; }

  /// audio: (batch, 1, samples). Returns logits laid out (batch, frames, 3).
  /// `rng` drives dropout and is only used in train mode.
  std::vector<T> forward(const Tensor3<T>& audio, Mode mode, Rng* rng = nullptr);

  /// Gradient of the loss w.r.t. the logits of the last forward call.
  void backward(const std::vector<T>& dlogits);

  int frames_for(int samples) const;
  int last_batch() const { return batch_; }
  int last_frames() const { return frames_; }

  /// All parameters including batch-norm running moments (trainable=false).
  std::vector<Param<T>*> params();
  std::vector<const Param<T>*> params() const;
  std::vector<Param<T>*> trainable_params();
  void zero_grad();
  std::size_t parameter_count() const;

  /// Which side of every leaky-ReLU kink the last forward call was on.
  std::vector<unsigned char> activation_pattern() const;

 private:
  struct Layers;

  ModelConfig cfg_;
  std::unique_ptr<Layers> layers_;
  int batch_ = 0;
  int frames_ = 0;
};

/// Copies values between models of identical configuration (any precision).
template <typename From, typename To>
void copy_parameters(const Model<From>& from, Model<To>& to);

/// Checks config invariants and returns a freshly initialized model.
Model<float> build_model(const ModelConfig& cfg, std::uint64_t seed);

/// Eval-mode forward over one 16 kHz window: one label per 16 samples,
/// argmax with ties toward the lower class index.
FrameLabelSequence forward_window(Model<float>& model, const std::vector<float>& samples);

/// Eval-mode forward over several equal-length windows at once.
std::vector<FrameLabelSequence> forward_windows(
    Model<float>& model, const std::vector<std::vector<float>>& windows);

}  // namespace ddk
