#include "ddk/train.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <stdexcept>

#include "ddk/optim.h"

namespace ddk {

namespace {

constexpr int kRate = 16000;
constexpr int kWindow = 16000;  // samples per training window
constexpr int kFrameSamples = 16;
constexpr int kWindowFrames = kWindow / kFrameSamples;
constexpr std::int64_t kNoiseBankSamples = 30 * kRate;

struct Example {
  std::size_t trial = 0;
  std::int64_t offset = 0;  // first sample of the window
  std::int64_t ignore_before = 0;  // frames before this are unlabeled (-1)
};

void fill_example(const std::vector<LabeledAudio>& set, const Example& ex, float* audio,
                  int* labels) {
  const LabeledAudio& rec = set[ex.trial];
  const auto n = static_cast<std::int64_t>(rec.audio.samples.size());
  for (std::int64_t i = 0; i < kWindow; ++i) {
    const std::int64_t src = ex.offset + i;
    audio[i] = src < n ? rec.audio.samples[static_cast<std::size_t>(src)] : 0.0f;
  }
  for (int k = 0; k < kWindowFrames; ++k) {
    const std::int64_t mid = ex.offset + k * kFrameSamples + kFrameSamples / 2;
    if (k < ex.ignore_before || mid >= n) {
      labels[k] = -1;
      continue;
    }
    labels[k] = static_cast<int>(label_at(rec.segments, static_cast<double>(mid) / kFrameSamples));
  }
}

std::vector<Example> validation_examples(const std::vector<LabeledAudio>& set) {
  std::vector<Example> out;
  for (std::size_t t = 0; t < set.size(); ++t) {
    const auto n = static_cast<std::int64_t>(set[t].audio.samples.size());
    std::int64_t covered = 0;
    for (std::int64_t off : training_offsets(n, 0)) {
      const std::int64_t first_new = std::max<std::int64_t>(0, covered - off);
      out.push_back({t, off, first_new / kFrameSamples});
      covered = off + kWindow;
    }
  }
  return out;
}

struct EvalTotals {
  double loss = 0.0;
  double accuracy = 0.0;
};

int argmax3(const float* z) {
  int best = 0;
  for (int k = 1; k < kNumClasses; ++k) {
    if (z[k] > z[best]) best = k;
  }
  return best;
}

EvalTotals evaluate_examples(Model<float>& model, const std::vector<LabeledAudio>& set,
                             const std::vector<Example>& examples, int batch_size,
                             const std::vector<float>& weights) {
  double loss_sum = 0.0;
  std::int64_t counted = 0, correct = 0;
  for (std::size_t start = 0; start < examples.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(examples.size(), start + static_cast<std::size_t>(batch_size));
    const int b = static_cast<int>(end - start);
    Tensor3<float> x(b, 1, kWindow);
    std::vector<int> labels(static_cast<std::size_t>(b) * kWindowFrames);
    for (int i = 0; i < b; ++i) {
      fill_example(set, examples[start + static_cast<std::size_t>(i)], x.row(i, 0),
                   labels.data() + static_cast<std::size_t>(i) * kWindowFrames);
    }
    const std::vector<float> logits = model.forward(x, Mode::Eval);
    const auto r = softmax_xent<float>(logits, labels, kNumClasses, weights);
    loss_sum += static_cast<double>(r.loss) * r.counted;
    counted += r.counted;
    for (std::size_t f = 0; f < labels.size(); ++f) {
      if (labels[f] < 0) continue;
      correct += argmax3(logits.data() + f * kNumClasses) == labels[f];
    }
  }
  if (counted == 0) return {};
  return {loss_sum / static_cast<double>(counted),
          static_cast<double>(correct) / static_cast<double>(counted)};
}

std::vector<std::vector<float>> snapshot(const Model<float>& model) {
  std::vector<std::vector<float>> out;
  for (const Param<float>* p : model.params()) out.push_back(p->value);
  return out;
}

void restore(Model<float>& model, const std::vector<std::vector<float>>& values) {
  auto params = model.params();
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = values[i];
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
  if (!(lr > 0.0)) throw std::invalid_argument("TrainConfig: lr must be positive");
  if (max_epochs < 1) throw std::invalid_argument("TrainConfig: max_epochs must be >= 1");
  if (patience < 1 || patience > max_epochs) {
    throw std::invalid_argument("TrainConfig: need 1 <= patience <= max_epochs");
  }
  if (!(min_delta >= 0.0 && min_delta < 1.0)) throw std::invalid_argument("TrainConfig: min_delta must lie in [0, 1)");
  if (!(class_weight_cap >= 1.0)) throw std::invalid_argument("TrainConfig: class weight cap must be >= 1");
  augment.validate(kRate);
}

std::vector<LabeledAudio> load_split(const std::vector<ManifestEntry>& manifest,
                                     const std::string& split) {
  std::vector<LabeledAudio> out;
  for (const auto& e : manifest) {
    if (e.split != split) continue;
    LabeledAudio rec;
    rec.id = e.trial_id;
    rec.audio = resample(read_wav(e.wav_path), kRate);
    rec.segments = read_segments_csv(e.labels_path);
    if (!rec.segments.empty() && rec.segments.back().offset_ms > rec.audio.duration_ms() + 1) {
      throw DataError(e.labels_path + ": segments extend past the end of " + e.wav_path);
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<float> class_weights(const std::vector<std::int64_t>& counts, double cap) {
  const std::int64_t most = *std::max_element(counts.begin(), counts.end());
  std::vector<float> w(counts.size());
  for (std::size_t c = 0; c < counts.size(); ++c) {
    const double v = counts[c] > 0 ? static_cast<double>(most) / static_cast<double>(counts[c]) : cap;
    w[c] = static_cast<float>(std::min(v, cap));
  }
  return w;
}

std::vector<std::int64_t> training_offsets(std::int64_t samples, std::int64_t shift) {
  std::vector<std::int64_t> out;
  if (samples <= kWindow) {
    out.push_back(0);
    return out;
  }
  shift = std::clamp<std::int64_t>(shift, 0, samples - kWindow);
  std::int64_t off = shift;
  for (; off + kWindow <= samples; off += kWindow) out.push_back(off);
  if (off < samples) out.push_back(samples - kWindow);
  return out;
}

TrainResult train(const std::vector<LabeledAudio>& train_set,
                  const std::vector<LabeledAudio>& val_set, const TrainConfig& cfg,
                  const ModelConfig& model_cfg,
                  const std::function<void(const EpochLog&)>& on_epoch) {
  cfg.validate();
  if (train_set.empty()) throw DataError("train: empty training set");
  if (val_set.empty()) throw DataError("train: empty validation set");
  for (const auto* set : {&train_set, &val_set}) {
    for (const auto& rec : *set) {
      if (rec.audio.sample_rate_hz != kRate) throw DataError(rec.id + ": expected 16 kHz audio");
      if (!is_valid(rec.segments)) throw DataError(rec.id + ": invalid segment sequence");
      if (!rec.segments.empty() && rec.segments.back().offset_ms > rec.audio.duration_ms() + 1) {
        throw DataError(rec.id + ": labels extend past the audio");
      }
    }
  }

  std::vector<std::int64_t> counts(kNumClasses, 0);
  for (const auto& rec : train_set) {
    for (Label l : rasterize(rec.segments, rec.audio.duration_ms())) ++counts[static_cast<int>(l)];
  }
  const std::vector<float> weights = class_weights(counts, cfg.class_weight_cap);

  TrainResult result{build_model(model_cfg, Rng::derive(cfg.seed, 1)), {}, 0, -1.0};
  Model<float>& model = result.model;
  auto trainable = model.trainable_params();
  AdamState adam;
  adam.lr = cfg.lr;

  const Waveform noise_bank = synth_noise(kNoiseBankSamples, Rng::derive(cfg.seed, 2), kRate);
  const std::vector<Example> val_examples = validation_examples(val_set);
  std::vector<std::vector<float>> best = snapshot(model);
  int last_gain = 0;  // last epoch that beat the best accuracy by more than min_delta

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    Rng rng(Rng::derive(cfg.seed, 1000 + static_cast<std::uint64_t>(epoch)));
    Rng dropout_rng(Rng::derive(cfg.seed, 2000 + static_cast<std::uint64_t>(epoch)));
    std::vector<Example> examples;
    for (std::size_t t = 0; t < train_set.size(); ++t) {
      const auto n = static_cast<std::int64_t>(train_set[t].audio.samples.size());
      const std::int64_t shift = cfg.random_shift ? rng.uniform_int(0, 999) : 0;
      for (std::int64_t off : training_offsets(n, shift)) examples.push_back({t, off, 0});
    }
    for (std::size_t i = examples.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(examples[i - 1], examples[j]);
    }

    double loss_sum = 0.0;
    int batches = 0;
    const auto bs = static_cast<std::size_t>(cfg.batch_size);
    for (std::size_t start = 0; start < examples.size(); start += bs) {
      const std::size_t end = std::min(examples.size(), start + bs);
      const int b = static_cast<int>(end - start);
      Tensor3<float> x(b, 1, kWindow);
      std::vector<int> labels(static_cast<std::size_t>(b) * kWindowFrames);
      for (int i = 0; i < b; ++i) {
        float* row = x.row(i, 0);
        fill_example(train_set, examples[start + static_cast<std::size_t>(i)], row,
                     labels.data() + static_cast<std::size_t>(i) * kWindowFrames);
        const AugmentChoice choice = draw_augmentation(cfg.augment, rng);
        if (choice.kind != AugmentKind::Clean) {
          Waveform w;
          w.samples.assign(row, row + kWindow);
          w = apply_augmentation(w, choice, noise_bank, rng);
          std::copy(w.samples.begin(), w.samples.end(), row);
        }
      }
      model.zero_grad();
      const std::vector<float> logits = model.forward(x, Mode::Train, &dropout_rng);
      const auto r = softmax_xent<float>(logits, labels, kNumClasses, weights);
      model.backward(r.grad);
      adam_step<float>(trainable, adam);
      loss_sum += r.loss;
      ++batches;
    }

    const EvalTotals val = evaluate_examples(model, val_set, val_examples, cfg.batch_size, weights);
    const EpochLog entry{epoch, loss_sum / batches, val.loss, val.accuracy};
    result.log.push_back(entry);
    if (on_epoch) on_epoch(entry);
    if (val.accuracy > result.best_val_acc) {
      if (val.accuracy > result.best_val_acc + cfg.min_delta) last_gain = epoch;
      result.best_val_acc = val.accuracy;
      result.best_epoch = epoch;
      best = snapshot(model);
    }
    if (epoch - last_gain >= cfg.patience) break;
  }
  restore(model, best);
  return result;
}

double train_steps(Model<float>& model, const Tensor3<float>& audio,
                   const std::vector<int>& labels, int steps, double lr, std::uint64_t seed) {
  auto trainable = model.trainable_params();
  AdamState adam;
  adam.lr = lr;
  Rng rng(seed);
  double loss = 0.0;
  for (int s = 0; s < steps; ++s) {
    model.zero_grad();
    const std::vector<float> logits = model.forward(audio, Mode::Train, &rng);
    const auto r = softmax_xent<float>(logits, labels, kNumClasses);
    model.backward(r.grad);
    adam_step<float>(trainable, adam);
    loss = r.loss;
  }
  return loss;
}

void write_training_log(std::ostream& out, const std::vector<EpochLog>& log) {
  out << "epoch,train_loss,val_loss,val_frame_acc\n";
  out << std::setprecision(9);
  for (const auto& e : log) {
    out << e.epoch << ',' << e.train_loss << ',' << e.val_loss << ',' << e.val_frame_acc << '\n';
  }
}

void write_training_log(const std::string& path, const std::vector<EpochLog>& log) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write training log " + path);
  write_training_log(out, log);
}

FrameLabelSequence predict_file(Model<float>& model, const Waveform& w, const WindowPlan& plan) {
  FrameLabelSequence out;
  const std::int64_t total_ms = w.duration_ms();
  if (total_ms <= 0) return out;
  Waveform audio = resample(w, kRate);
  audio.samples.resize(static_cast<std::size_t>(total_ms * kFrameSamples), 0.0f);
  const std::vector<AudioWindow> windows = cut_windows(audio, plan);

  // Batch windows of equal length together.
  std::map<std::size_t, std::vector<std::size_t>> by_length;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    by_length[windows[i].audio.samples.size()].push_back(i);
  }
  std::vector<FrameLabelSequence> per_window(windows.size());
  constexpr std::size_t kMaxBatch = 16;
  for (const auto& [length, indices] : by_length) {
    for (std::size_t start = 0; start < indices.size(); start += kMaxBatch) {
      const std::size_t end = std::min(indices.size(), start + kMaxBatch);
      std::vector<std::vector<float>> batch;
      for (std::size_t i = start; i < end; ++i) batch.push_back(windows[indices[i]].audio.samples);
      auto labels = forward_windows(model, batch);
      for (std::size_t i = start; i < end; ++i) per_window[indices[i]] = std::move(labels[i - start]);
    }
  }
  std::vector<std::pair<std::int64_t, FrameLabelSequence>> parts;
  bool padded = false;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    padded = padded || per_window[i].padded;
    parts.emplace_back(windows[i].start_ms, std::move(per_window[i]));
  }
  out = stitch_predictions(parts, total_ms, plan);
  out.padded = padded;
  return out;
}

double frame_accuracy(const std::vector<Label>& pred, const std::vector<Label>& truth) {
  if (pred.size() != truth.size()) throw ShapeError("frame_accuracy: length mismatch");
  if (pred.empty()) return 0.0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hit += pred[i] == truth[i];
  return static_cast<double>(hit) / static_cast<double>(pred.size());
}

}  // namespace ddk
