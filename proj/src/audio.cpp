#include "ddk/audio.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>

namespace ddk {

std::int64_t Waveform::duration_ms() const {
  if (sample_rate_hz <= 0) return 0;
  const auto n = static_cast<std::int64_t>(samples.size());
  return (n * 1000 + sample_rate_hz / 2) / sample_rate_hz;
}

namespace {

constexpr float kMaxSample = 32767.0f / 32768.0f;

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

}  // namespace

Waveform read_wav(const std::string& path) {
  if (!std::filesystem::exists(path)) {
    throw WavError(WavErrorKind::MissingFile, "wav: no such file '" + path + "'");
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw WavError(WavErrorKind::MissingFile, "wav: cannot open '" + path + "'");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  auto malformed = [&](const std::string& why) {
    return WavError(WavErrorKind::MalformedRiff, "wav: " + path + ": " + why);
  };
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw malformed("not a RIFF/WAVE file");
  }

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::uint32_t size = read_u32(chunk + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size()) {
      // Tolerate a truncated data chunk (common with streamed writers).
      if (std::memcmp(chunk, "data", 4) != 0) throw malformed("chunk overruns file");
    }
    const std::size_t avail = std::min<std::size_t>(size, bytes.size() - body);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (avail < 16) throw malformed("fmt chunk too short");
      format = read_u16(chunk + 8);
      channels = read_u16(chunk + 10);
      rate = read_u32(chunk + 12);
      bits = read_u16(chunk + 22);
      if (format == 0xFFFE && avail >= 26) format = read_u16(chunk + 32);
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      data_size = avail;
    }
    pos = body + size + (size & 1u);
  }
  if (!have_fmt) throw malformed("missing fmt chunk");
  if (data == nullptr) throw malformed("missing data chunk");
  if (format != 1) {
    throw WavError(WavErrorKind::UnsupportedEncoding,
                   "wav: " + path + ": only integer PCM is supported (format " +
                       std::to_string(format) + ")");
  }
  if (bits != 16) {
    throw WavError(WavErrorKind::UnsupportedEncoding,
                   "wav: " + path + ": only 16-bit samples are supported (got " +
                       std::to_string(bits) + ")");
  }
  if (channels != 1 && channels != 2) {
    throw WavError(WavErrorKind::UnsupportedEncoding,
                   "wav: " + path + ": expected 1 or 2 channels, got " +
                       std::to_string(channels));
  }
  if (rate == 0) throw malformed("sample rate is zero");

  Waveform w;
  w.sample_rate_hz = static_cast<int>(rate);
  const std::size_t frame_bytes = 2u * channels;
  const std::size_t frames = data_size / frame_bytes;
  w.samples.resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    const unsigned char* f = data + i * frame_bytes;
    if (channels == 1) {
      w.samples[i] = static_cast<float>(static_cast<std::int16_t>(read_u16(f)) / 32768.0);
    } else {
      const double l = static_cast<std::int16_t>(read_u16(f));
      const double r = static_cast<std::int16_t>(read_u16(f + 2));
      w.samples[i] = static_cast<float>((l + r) / 2.0 / 32768.0);
    }
  }
  return w;
}

void write_wav(const std::string& path, const Waveform& w) {
  if (w.sample_rate_hz <= 0) {
    throw WavError(WavErrorKind::WriteFailed, "wav: sample rate must be positive");
  }
  const auto data_size = static_cast<std::uint32_t>(w.samples.size() * 2);
  std::string out;
  out.reserve(44 + data_size);
  out += "RIFF";
  put_u32(out, 36 + data_size);
  out += "WAVEfmt ";
  put_u32(out, 16);
  put_u16(out, 1);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(w.sample_rate_hz));
  put_u32(out, static_cast<std::uint32_t>(w.sample_rate_hz) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out += "data";
  put_u32(out, data_size);
  for (float s : w.samples) {
    const double scaled = std::round(static_cast<double>(s) * 32768.0);
    const auto v = static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
    put_u16(out, static_cast<std::uint16_t>(v));
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw WavError(WavErrorKind::WriteFailed, "wav: cannot write '" + path + "'");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw WavError(WavErrorKind::WriteFailed, "wav: write failed for '" + path + "'");
}

// ---------------------------------------------------------------------------
// Resampling

namespace {

constexpr int kTaps = 64;
constexpr double kBeta = 8.6;

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

/// Taps for input offsets k = -31..32 around floor(position), for a fractional
/// position `frac` in [0, 1). Normalized to unit DC gain.
void phase_taps(double frac, double cutoff, double* taps) {
  const double half = kTaps / 2.0;
  const double i0_beta = bessel_i0(kBeta);
  double sum = 0.0;
  for (int j = 0; j < kTaps; ++j) {
    const int k = j - (kTaps / 2 - 1);
    const double tau = k - frac;
    const double x = cutoff * tau;
    const double sinc = std::abs(x) < 1e-12 ? 1.0 : std::sin(M_PI * x) / (M_PI * x);
    const double r = tau / half;
    const double win = std::abs(r) >= 1.0 ? 0.0 : bessel_i0(kBeta * std::sqrt(1.0 - r * r)) / i0_beta;
    taps[j] = cutoff * sinc * win;
    sum += taps[j];
  }
  for (int j = 0; j < kTaps; ++j) taps[j] /= sum;
}

}  // namespace

Waveform resample(const Waveform& w, int target_hz) {
  if (target_hz <= 0) throw std::invalid_argument("resample: target rate must be positive");
  if (w.sample_rate_hz <= 0) throw std::invalid_argument("resample: source rate must be positive");
  if (target_hz == w.sample_rate_hz) return w;

  const std::int64_t src = w.sample_rate_hz;
  const std::int64_t dst = target_hz;
  const std::int64_t g = std::gcd(src, dst);
  const std::int64_t up = dst / g;
  const std::int64_t down = src / g;
  const double cutoff = std::min(1.0, static_cast<double>(dst) / static_cast<double>(src));
  const auto len = static_cast<std::int64_t>(w.samples.size());
  const std::int64_t out_len = (len * dst + src / 2) / src;

  constexpr std::int64_t kMaxTable = 8192;
  std::vector<double> table;
  if (up <= kMaxTable) {
    table.resize(static_cast<std::size_t>(up) * kTaps);
    for (std::int64_t p = 0; p < up; ++p) {
      phase_taps(static_cast<double>(p) / static_cast<double>(up), cutoff,
                 table.data() + p * kTaps);
    }
  }

  Waveform out;
  out.sample_rate_hz = target_hz;
  out.samples.resize(static_cast<std::size_t>(out_len));
  std::vector<double> scratch(kTaps);
  for (std::int64_t n = 0; n < out_len; ++n) {
    const std::int64_t num = n * down;
    const std::int64_t base = num / up;
    const std::int64_t phase = num % up;
    const double* taps;
    if (table.empty()) {
      phase_taps(static_cast<double>(phase) / static_cast<double>(up), cutoff, scratch.data());
      taps = scratch.data();
    } else {
      taps = table.data() + phase * kTaps;
    }
    double acc = 0.0;
    for (int j = 0; j < kTaps; ++j) {
      const std::int64_t idx = base + j - (kTaps / 2 - 1);
      if (idx >= 0 && idx < len) acc += taps[j] * w.samples[static_cast<std::size_t>(idx)];
    }
    out.samples[static_cast<std::size_t>(n)] =
        std::clamp(static_cast<float>(acc), -1.0f, kMaxSample);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Windows

void WindowPlan::validate() const {
  if (window_ms <= 0 || hop_ms <= 0 || hop_ms > window_ms) {
    throw std::invalid_argument("window plan: need 0 < hop_ms <= window_ms");
  }
}

std::vector<std::int64_t> window_starts(std::int64_t duration_ms, const WindowPlan& plan) {
  plan.validate();
  std::vector<std::int64_t> starts;
  if (duration_ms <= 0) return starts;
  if (duration_ms <= plan.window_ms) return {0};
  for (std::int64_t s = 0; s < duration_ms; s += plan.hop_ms) starts.push_back(s);
  return starts;
}

std::vector<AudioWindow> cut_windows(const Waveform& w, const WindowPlan& plan) {
  std::vector<AudioWindow> out;
  const auto per_ms = static_cast<std::int64_t>(w.sample_rate_hz) / 1000;
  const auto len = static_cast<std::int64_t>(w.samples.size());
  // Duration in whole or partial ms so trailing samples are never dropped.
  const std::int64_t duration = per_ms > 0 ? (len + per_ms - 1) / per_ms : w.duration_ms();
  for (std::int64_t start : window_starts(duration, plan)) {
    const std::int64_t lo = std::min(len, start * w.sample_rate_hz / 1000);
    const std::int64_t hi =
        std::min(len, (start + plan.window_ms) * w.sample_rate_hz / 1000);
    AudioWindow win;
    win.start_ms = start;
    win.audio.sample_rate_hz = w.sample_rate_hz;
    win.audio.samples.assign(w.samples.begin() + lo, w.samples.begin() + hi);
    out.push_back(std::move(win));
  }
  return out;
}

FrameLabelSequence stitch_predictions(
    const std::vector<std::pair<std::int64_t, FrameLabelSequence>>& windows,
    std::int64_t total_ms, const WindowPlan& plan) {
  FrameLabelSequence out;
  if (total_ms <= 0) return out;
  out.labels.assign(static_cast<std::size_t>(total_ms), Label::Other);
  bool with_probs = !windows.empty();
  for (const auto& [start, f] : windows) {
    if (f.probs.size() != f.labels.size() * kNumClasses) with_probs = false;
  }
  if (with_probs) out.probs.assign(static_cast<std::size_t>(total_ms) * kNumClasses, 0.0f);

  std::vector<double> best_dist(static_cast<std::size_t>(total_ms), -1.0);
  for (const auto& [start, f] : windows) {
    const double center = static_cast<double>(start) + plan.window_ms / 2.0;
    out.padded = out.padded || f.padded;
    for (std::size_t k = 0; k < f.labels.size(); ++k) {
      const std::int64_t t = start + static_cast<std::int64_t>(k);
      if (t < 0 || t >= total_ms) continue;
      const double d = std::abs(static_cast<double>(t) + 0.5 - center);
      double& best = best_dist[static_cast<std::size_t>(t)];
      if (best >= 0.0 && d >= best) continue;
      best = d;
      out.labels[static_cast<std::size_t>(t)] = f.labels[k];
      if (with_probs) {
        std::copy_n(f.probs.begin() + static_cast<std::ptrdiff_t>(k * kNumClasses), kNumClasses,
                    out.probs.begin() + t * kNumClasses);
      }
    }
  }
  for (std::int64_t t = 0; t < total_ms; ++t) {
    if (best_dist[static_cast<std::size_t>(t)] < 0.0) {
      throw std::logic_error("stitch_predictions: frame " + std::to_string(t) +
                             " is not covered by any window");
    }
  }
  return out;
}

}  // namespace ddk
