#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ddk/audio.h"
#include "ddk/segments.h"

namespace ddk {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

/// Parameters of one synthetic syllable train. Each trial draws a center value
/// per quantity from its range; syllables then vary by +-jitter (fraction of
/// the range width) around it, clamped to the range.
struct TrialSpec {
  int min_syllables = 8;
  int max_syllables = 12;
  Range vot_ms{20, 100};
  Range vowel_ms{80, 200};
  Range gap_ms{10, 150};
  Range f0_hz{90, 180};
  Range edge_ms{50, 300};  // leading and trailing silence
  double jitter = 0.15;
  double noise_floor_dbfs = -40.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Trial {
  Waveform audio;  // 16 kHz
  SegmentSequence segments;  // full tiling, Other included
  std::vector<double> f0_hz;  // per syllable
  bool alternating = false;   // AMR (one consonant) when false, SMR when true
};

Trial generate_trial(const TrialSpec& spec);

struct ManifestEntry {
  std::string trial_id;
  std::string wav_path;
  std::string labels_path;
  std::string split;  // train, val or test
};

struct CorpusSpec {
  int trials = 100;
  double train_ratio = 0.6;
  double val_ratio = 0.2;
  double test_ratio = 0.2;
  int sample_rate_hz = 16000;  // rate of the written WAV files
  std::uint64_t seed = 0;
  TrialSpec trial;

  void validate() const;
};

/// Writes trial_NNNN.wav / trial_NNNN.csv and manifest.csv under `dir`
/// (created if missing). Paths in the manifest are relative to `dir`.
std::vector<ManifestEntry> generate_corpus(const std::string& dir, const CorpusSpec& spec);

/// Manifest CSV with header trial_id,wav_path,labels_path,split. Relative
/// paths are resolved against the manifest's directory.
std::vector<ManifestEntry> read_manifest(const std::string& path);
void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries);

}  // namespace ddk
