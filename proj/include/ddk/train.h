#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "ddk/audio.h"
#include "ddk/augment.h"
#include "ddk/model.h"
#include "ddk/segments.h"
#include "ddk/synth.h"

namespace ddk {

struct TrainConfig {
  int batch_size = 32;
  double lr = 1e-4;
  int max_epochs = 50;
  int patience = 5;
  /// Validation accuracy gain needed to reset the patience count.
  double min_delta = 0.002;
  std::uint64_t seed = 0;
  bool random_shift = true;
  double class_weight_cap = 5.0;
  AugmentSpec augment;

  void validate() const;
};

/// A 16 kHz recording with its annotation.
struct LabeledAudio {
  std::string id;
  Waveform audio;
  SegmentSequence segments;
};

/// Loads (and resamples to 16 kHz) every manifest entry of `split`.
std::vector<LabeledAudio> load_split(const std::vector<ManifestEntry>& manifest,
                                     const std::string& split);

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_frame_acc = 0.0;
};

struct TrainResult {
  Model<float> model;
  std::vector<EpochLog> log;
  int best_epoch = 0;
  double best_val_acc = 0.0;
};

/// Inverse class frequency normalized so the most frequent class weighs 1,
/// capped at `cap`.
std::vector<float> class_weights(const std::vector<std::int64_t>& counts, double cap);

/// Start offsets (samples) of the 1 s training windows of a recording of
/// `samples` samples after dropping the first `shift` samples: disjoint
/// windows plus one aligned to the end when a remainder is left over.
std::vector<std::int64_t> training_offsets(std::int64_t samples, std::int64_t shift);

/// Mean weighted frame cross-entropy minimized with Adam over 1 s windows.
/// Each epoch reshuffles, draws a random start shift per recording and one
/// augmentation per window. Stops once `patience` epochs pass without a
/// validation accuracy gain above `min_delta`. The returned model carries the
/// parameters of the epoch with the best validation frame accuracy.
TrainResult train(const std::vector<LabeledAudio>& train_set,
                  const std::vector<LabeledAudio>& val_set, const TrainConfig& cfg,
                  const ModelConfig& model_cfg,
                  const std::function<void(const EpochLog&)>& on_epoch = {});

/// Continues training an existing model on fixed batches; used for overfit checks.
double train_steps(Model<float>& model, const Tensor3<float>& audio,
                   const std::vector<int>& labels, int steps, double lr, std::uint64_t seed);

/// CSV: epoch,train_loss,val_loss,val_frame_acc
void write_training_log(std::ostream& out, const std::vector<EpochLog>& log);
void write_training_log(const std::string& path, const std::vector<EpochLog>& log);

/// Frame labels for a whole recording: resample to 16 kHz, cut overlapping
/// windows, classify each and stitch. Returns duration_ms frames.
FrameLabelSequence predict_file(Model<float>& model, const Waveform& w,
                                const WindowPlan& plan = {});

/// Fraction of frames whose predicted label matches the reference.
double frame_accuracy(const std::vector<Label>& pred, const std::vector<Label>& truth);

}  // namespace ddk
