#pragma once

#include <cstdint>
#include <vector>

#include "ddk/audio.h"
#include "ddk/random.h"

namespace ddk {

struct MixResult {
  Waveform audio;
  double noise_gain = 0.0;      // amplitude factor applied to the noise
  bool silent_signal = false;   // signal RMS was 0; audio returned unchanged
};

double rms(const std::vector<float>& x);

/// Adds `noise` (tiled or cropped to the signal length) scaled so that
/// 20 log10(rms(signal) / rms(scaled noise)) == snr_db; the sum is clipped to
/// [-1, 1).
MixResult mix_noise(const Waveform& signal, const Waveform& noise, double snr_db);

/// Linear-phase 255-tap FIR band-stop (Kaiser-windowed), zero-phase aligned so
/// the output has the input's length and timing.
Waveform band_reject(const Waveform& w, double low_hz, double high_hz);

/// Band-stop impulse response used by band_reject.
std::vector<double> band_reject_taps(double low_hz, double high_hz, int sample_rate_hz);

/// Low-passed (500 Hz) Gaussian noise normalized to RMS 0.1, a stand-in for
/// car / air-conditioning rumble. Deterministic in `seed`.
Waveform synth_noise(std::int64_t samples, std::uint64_t seed, int sample_rate_hz = 16000);

enum class AugmentKind { Clean, Noise, BandReject };

struct AugmentChoice {
  AugmentKind kind = AugmentKind::Clean;
  double snr_db = 0.0;
  double low_hz = 0.0;
  double high_hz = 0.0;
};

/// Training-time augmentation policy: one mode drawn uniformly per example
/// among clean, noise at each SNR, and band-reject.
struct AugmentSpec {
  bool enabled = true;
  std::vector<double> snr_db = {5.0, 10.0, 15.0};
  double center_lo_hz = 500.0;
  double center_hi_hz = 6000.0;
  double width_lo_hz = 200.0;
  double width_hi_hz = 1000.0;

  void validate(int sample_rate_hz = 16000) const;
};

AugmentChoice draw_augmentation(const AugmentSpec& spec, Rng& rng);

/// Applies `choice`; noise is a random crop of `noise_bank`.
Waveform apply_augmentation(const Waveform& w, const AugmentChoice& choice,
                            const Waveform& noise_bank, Rng& rng);

}  // namespace ddk
