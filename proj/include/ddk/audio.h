#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ddk/segments.h"

namespace ddk {

/// Mono PCM audio with amplitudes in [-1, 1).
struct Waveform {
  std::vector<float> samples;
  int sample_rate_hz = 16000;

  /// round(1000 * len / rate)
  std::int64_t duration_ms() const;
};

enum class WavErrorKind { MissingFile, MalformedRiff, UnsupportedEncoding, WriteFailed };

class WavError : public std::runtime_error {
 public:
  WavError(WavErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  WavErrorKind kind() const { return kind_; }

 private:
  WavErrorKind kind_;
};

/// Reads 16-bit integer PCM, 1 or 2 channels. Stereo is averaged to mono and
/// an int16 sample s maps to s / 32768.
Waveform read_wav(const std::string& path);

/// Writes mono 16-bit PCM; samples are rounded and clamped to int16.
void write_wav(const std::string& path, const Waveform& w);

/// Kaiser-windowed sinc polyphase resampler (beta 8.6, 64 taps per phase,
/// cutoff at the lower Nyquist). Output length is round(len * target / source)
/// and equal rates return the input unchanged.
Waveform resample(const Waveform& w, int target_hz);

struct WindowPlan {
  int window_ms = 1000;
  int hop_ms = 800;

  void validate() const;
};

struct AudioWindow {
  std::int64_t start_ms = 0;
  Waveform audio;
};

/// Start offsets in ms for a signal of `duration_ms`: a single window when the
/// signal fits in one, otherwise every multiple of hop_ms below the duration.
std::vector<std::int64_t> window_starts(std::int64_t duration_ms, const WindowPlan& plan);

/// Cuts w into windows; the last one may be shorter. Empty input -> no windows.
std::vector<AudioWindow> cut_windows(const Waveform& w, const WindowPlan& plan);

/// Merges per-window frame labels (1 per ms) into one sequence of total_ms
/// frames. Each frame takes the label of the covering window whose nominal
/// center (start + window_ms / 2) is nearest; ties go to the earlier window.
/// Throws std::logic_error if some frame is covered by no window.
FrameLabelSequence stitch_predictions(
    const std::vector<std::pair<std::int64_t, FrameLabelSequence>>& windows,
    std::int64_t total_ms, const WindowPlan& plan = {});

}  // namespace ddk
