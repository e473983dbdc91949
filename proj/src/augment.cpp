#include "ddk/augment.h"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <stdexcept>

namespace ddk {

namespace {

constexpr float kMaxSample = 32767.0f / 32768.0f;
constexpr int kFirTaps = 255;
constexpr double kFirBeta = 5.0;

double bessel_i0(double x) {
  double sum = 1.0;
  double term = 1.0;
  const double q = x * x / 4.0;
  for (int k = 1; k < 200; ++k) {
    term *= q / (static_cast<double>(k) * k);
    sum += term;
    if (term < sum * 1e-17) break;
  }
  return sum;
}

/// Kaiser-windowed ideal low-pass with cutoff fc (cycles/sample).
std::vector<double> lowpass_taps(double fc, int taps, double beta) {
  std::vector<double> h(static_cast<std::size_t>(taps));
  const int mid = taps / 2;
  const double i0 = bessel_i0(beta);
  for (int n = 0; n < taps; ++n) {
    const int k = n - mid;
    const double ideal = k == 0 ? 2.0 * fc : std::sin(2.0 * M_PI * fc * k) / (M_PI * k);
    const double r = static_cast<double>(k) / mid;
    h[static_cast<std::size_t>(n)] = ideal * bessel_i0(beta * std::sqrt(1.0 - r * r)) / i0;
  }
  return h;
}

/// Same-length, delay-compensated FIR filtering with zero boundary.
std::vector<float> filter_centered(const std::vector<float>& x, const std::vector<double>& h) {
  const int taps = static_cast<int>(h.size());
  const int mid = taps / 2;
  const auto n = static_cast<std::int64_t>(x.size());
  std::vector<float> y(x.size());
  for (std::int64_t i = 0; i < n; ++i) {
    double acc = 0.0;
    const std::int64_t lo = std::max<std::int64_t>(0, i - mid);
    const std::int64_t hi = std::min<std::int64_t>(n - 1, i + mid);
    for (std::int64_t j = lo; j <= hi; ++j) acc += h[static_cast<std::size_t>(i - j + mid)] * x[j];
    y[static_cast<std::size_t>(i)] = static_cast<float>(acc);
  }
  return y;
}

}  // namespace

double rms(const std::vector<float>& x) {
  if (x.empty()) return 0.0;
  double s = 0.0;
  for (float v : x) s += static_cast<double>(v) * v;
  return std::sqrt(s / static_cast<double>(x.size()));
}

MixResult mix_noise(const Waveform& signal, const Waveform& noise, double snr_db) {
  MixResult r;
  r.audio = signal;
  const double rs = rms(signal.samples);
  if (rs == 0.0) {
    r.silent_signal = true;
    std::cerr << "mix_noise: signal is silent, returning it unmixed\n";
    return r;
  }
  if (noise.samples.empty()) throw std::invalid_argument("mix_noise: empty noise");
  std::vector<float> tiled(signal.samples.size());
  for (std::size_t i = 0; i < tiled.size(); ++i) {
    tiled[i] = noise.samples[i % noise.samples.size()];
  }
  const double rn = rms(tiled);
  if (rn == 0.0) throw std::invalid_argument("mix_noise: noise is silent");
  r.noise_gain = rs / (rn * std::pow(10.0, snr_db / 20.0));
  for (std::size_t i = 0; i < tiled.size(); ++i) {
    const double v = signal.samples[i] + r.noise_gain * tiled[i];
    r.audio.samples[i] = static_cast<float>(std::clamp(v, -1.0, static_cast<double>(kMaxSample)));
  }
  return r;
}

std::vector<double> band_reject_taps(double low_hz, double high_hz, int sample_rate_hz) {
  const double nyquist = sample_rate_hz / 2.0;
  if (!(low_hz > 0.0 && low_hz < high_hz && high_hz < nyquist)) {
    throw std::invalid_argument("band_reject: need 0 < low < high < nyquist");
  }
  const auto lo = lowpass_taps(low_hz / sample_rate_hz, kFirTaps, kFirBeta);
  const auto hi = lowpass_taps(high_hz / sample_rate_hz, kFirTaps, kFirBeta);
  std::vector<double> h(kFirTaps);
  for (int n = 0; n < kFirTaps; ++n) h[n] = lo[n] - hi[n];
  h[kFirTaps / 2] += 1.0;
  return h;
}

Waveform band_reject(const Waveform& w, double low_hz, double high_hz) {
  const auto h = band_reject_taps(low_hz, high_hz, w.sample_rate_hz);
  Waveform out;
  out.sample_rate_hz = w.sample_rate_hz;
  out.samples = filter_centered(w.samples, h);
  for (float& v : out.samples) v = std::clamp(v, -1.0f, kMaxSample);
  return out;
}

Waveform synth_noise(std::int64_t samples, std::uint64_t seed, int sample_rate_hz) {
  Waveform out;
  out.sample_rate_hz = sample_rate_hz;
  if (samples <= 0) throw std::invalid_argument("synth_noise: duration must be positive");
  Rng rng(seed);
  std::vector<float> white(static_cast<std::size_t>(samples));
  for (float& v : white) v = static_cast<float>(rng.normal());
  const auto h = lowpass_taps(500.0 / sample_rate_hz, kFirTaps, kFirBeta);
  out.samples = filter_centered(white, h);
  const double r = rms(out.samples);
  const double gain = r > 0.0 ? 0.1 / r : 0.0;
  for (float& v : out.samples) {
    v = std::clamp(static_cast<float>(v * gain), -1.0f, kMaxSample);
  }
  return out;
}

void AugmentSpec::validate(int sample_rate_hz) const {
  const double nyquist = sample_rate_hz / 2.0;
  for (double s : snr_db) {
    if (s != 5.0 && s != 10.0 && s != 15.0) {
      throw std::invalid_argument("augment: SNR values must be 5, 10 or 15 dB");
    }
  }
  if (!(center_lo_hz > 0 && center_lo_hz <= center_hi_hz && width_lo_hz > 0 &&
        width_lo_hz <= width_hi_hz &&
        center_lo_hz - width_hi_hz / 2.0 >= 0.0 &&
        center_hi_hz + width_hi_hz / 2.0 < nyquist)) {
    throw std::invalid_argument("augment: band-reject range must stay inside (0, nyquist)");
  }
}

AugmentChoice draw_augmentation(const AugmentSpec& spec, Rng& rng) {
  AugmentChoice c;
  if (!spec.enabled) return c;
  const auto modes = static_cast<std::int64_t>(spec.snr_db.size()) + 2;
  const std::int64_t m = rng.uniform_int(0, modes - 1);
  if (m == 0) return c;
  if (m == modes - 1) {
    c.kind = AugmentKind::BandReject;
    const double center = rng.uniform(spec.center_lo_hz, spec.center_hi_hz);
    const double width = rng.uniform(spec.width_lo_hz, spec.width_hi_hz);
    c.low_hz = std::max(center - width / 2.0, 1.0);
    c.high_hz = center + width / 2.0;
    return c;
  }
  c.kind = AugmentKind::Noise;
  c.snr_db = spec.snr_db[static_cast<std::size_t>(m - 1)];
  return c;
}

Waveform apply_augmentation(const Waveform& w, const AugmentChoice& choice,
                            const Waveform& noise_bank, Rng& rng) {
  switch (choice.kind) {
    case AugmentKind::Clean:
      return w;
    case AugmentKind::BandReject:
      return band_reject(w, choice.low_hz, choice.high_hz);
    case AugmentKind::Noise: {
      Waveform crop;
      crop.sample_rate_hz = noise_bank.sample_rate_hz;
      const auto n = static_cast<std::int64_t>(noise_bank.samples.size());
      const std::int64_t start = n > 0 ? rng.uniform_int(0, n - 1) : 0;
      crop.samples.resize(w.samples.size());
      for (std::size_t i = 0; i < crop.samples.size(); ++i) {
        crop.samples[i] = noise_bank.samples[static_cast<std::size_t>((start + static_cast<std::int64_t>(i)) % n)];
      }
      return mix_noise(w, crop, choice.snr_db).audio;
    }
  }
  return w;
}

}  // namespace ddk
