#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "ddk/audio.h"
#include "ddk/random.h"

using namespace ddk;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("ddk_audio_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void put16(std::ofstream& f, std::uint16_t v) { f.write(reinterpret_cast<const char*>(&v), 2); }
void put32(std::ofstream& f, std::uint32_t v) { f.write(reinterpret_cast<const char*>(&v), 4); }

// Writes a canonical 44-byte-header PCM file by hand.
void write_raw_wav(const std::string& path, int rate, int channels, int bits,
                   const std::vector<std::int16_t>& samples, std::uint16_t format = 1) {
  std::ofstream f(path, std::ios::binary);
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(samples.size() * bits / 8);
  f.write("RIFF", 4);
  put32(f, 36 + data_bytes);
  f.write("WAVE", 4);
  f.write("fmt ", 4);
  put32(f, 16);
  put16(f, format);
  put16(f, static_cast<std::uint16_t>(channels));
  put32(f, static_cast<std::uint32_t>(rate));
  put32(f, static_cast<std::uint32_t>(rate * channels * bits / 8));
  put16(f, static_cast<std::uint16_t>(channels * bits / 8));
  put16(f, static_cast<std::uint16_t>(bits));
  f.write("data", 4);
  put32(f, data_bytes);
  if (bits == 16) {
    for (auto s : samples) put16(f, static_cast<std::uint16_t>(s));
  } else {
    for (auto s : samples) f.put(static_cast<char>(s));
  }
}

// Magnitude of the DTFT at frequency f (Hz) with a Hann window.
double dtft_mag(const std::vector<float>& x, int rate, double f) {
  std::complex<double> acc = 0.0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double w = 0.5 - 0.5 * std::cos(2.0 * M_PI * static_cast<double>(i) / (n - 1));
    acc += w * x[i] * std::polar(1.0, -2.0 * M_PI * f * static_cast<double>(i) / rate);
  }
  return std::abs(acc);
}

}  // namespace

TEST(ReadWav, ScalesInt16) {
  TempDir dir;
  write_raw_wav(dir.file("a.wav"), 44100, 1, 16, {0, 16384, -32768});
  const auto w = read_wav(dir.file("a.wav"));
  EXPECT_EQ(w.sample_rate_hz, 44100);
  EXPECT_EQ(w.samples, (std::vector<float>{0.0f, 0.5f, -1.0f}));
}

TEST(ReadWav, StereoAveraged) {
  TempDir dir;
  write_raw_wav(dir.file("s.wav"), 16000, 2, 16, {1000, 3000});
  const auto w = read_wav(dir.file("s.wav"));
  ASSERT_EQ(w.samples.size(), 1u);
  EXPECT_FLOAT_EQ(w.samples[0], 2000.0f / 32768.0f);
}

TEST(ReadWav, DistinctErrors) {
  TempDir dir;
  try {
    read_wav(dir.file("missing.wav"));
    FAIL();
  } catch (const WavError& e) {
    EXPECT_EQ(e.kind(), WavErrorKind::MissingFile);
  }
  write_raw_wav(dir.file("8bit.wav"), 8000, 1, 8, {1, 2, 3});
  try {
    read_wav(dir.file("8bit.wav"));
    FAIL();
  } catch (const WavError& e) {
    EXPECT_EQ(e.kind(), WavErrorKind::UnsupportedEncoding);
  }
  write_raw_wav(dir.file("float.wav"), 8000, 1, 16, {1, 2}, 3);
  try {
    read_wav(dir.file("float.wav"));
    FAIL();
  } catch (const WavError& e) {
    EXPECT_EQ(e.kind(), WavErrorKind::UnsupportedEncoding);
  }
  {
    std::ofstream f(dir.file("junk.wav"), std::ios::binary);
    f << "RIFX nonsense";
  }
  try {
    read_wav(dir.file("junk.wav"));
    FAIL();
  } catch (const WavError& e) {
    EXPECT_EQ(e.kind(), WavErrorKind::MalformedRiff);
  }
}

TEST(WriteWav, RoundTripIsExact) {
  TempDir dir;
  Rng rng(1);
  std::vector<std::int16_t> ints(5000);
  for (auto& v : ints) v = static_cast<std::int16_t>(rng.uniform_int(-32768, 32767));
  write_raw_wav(dir.file("in.wav"), 22050, 1, 16, ints);
  const auto w = read_wav(dir.file("in.wav"));
  write_wav(dir.file("out.wav"), w);
  const auto back = read_wav(dir.file("out.wav"));
  EXPECT_EQ(back.sample_rate_hz, 22050);
  EXPECT_EQ(back.samples, w.samples);
  for (std::size_t i = 0; i < ints.size(); ++i) {
    ASSERT_EQ(static_cast<int>(std::lround(back.samples[i] * 32768.0f)), ints[i]);
  }
}

TEST(Resample, IdentityAtEqualRates) {
  Waveform w;
  w.samples = {0.1f, -0.2f, 0.3f};
  const auto r = resample(w, 16000);
  EXPECT_EQ(r.samples, w.samples);
  EXPECT_EQ(resample(r, 16000).samples, r.samples);
}

TEST(Resample, LengthArithmetic) {
  Waveform w;
  w.sample_rate_hz = 44100;
  w.samples.assign(44100, 0.0f);
  EXPECT_NEAR(static_cast<double>(resample(w, 16000).samples.size()), 16000.0, 1.0);
  w.samples.assign(12345, 0.0f);
  EXPECT_EQ(resample(w, 16000).samples.size(),
            static_cast<std::size_t>(std::llround(12345.0 * 16000.0 / 44100.0)));
}

TEST(Resample, SineKeepsFrequencyAndSuppressesSidebands) {
  Waveform w;
  w.sample_rate_hz = 44100;
  for (int i = 0; i < 44100; ++i) {
    w.samples.push_back(static_cast<float>(0.5 * std::sin(2.0 * M_PI * 1000.0 * i / 44100.0)));
  }
  const auto r = resample(w, 16000);
  // Drop the filter transient at both ends.
  std::vector<float> mid(r.samples.begin() + 200, r.samples.end() - 200);
  const double peak = dtft_mag(mid, 16000, 1000.0);
  double worst = 0.0;
  double best_f = 0.0, best = 0.0;
  for (double f = 50.0; f < 8000.0; f += 25.0) {
    const double m = dtft_mag(mid, 16000, f);
    if (m > best) best = m, best_f = f;
    if (std::abs(f - 1000.0) > 50.0) worst = std::max(worst, m);
  }
  EXPECT_EQ(best_f, 1000.0);
  EXPECT_LT(20.0 * std::log10(worst / peak), -40.0);
}

TEST(Windows, StartOffsets) {
  const WindowPlan plan;
  EXPECT_EQ(window_starts(2500, plan), (std::vector<std::int64_t>{0, 800, 1600, 2400}));
  EXPECT_EQ(window_starts(600, plan), (std::vector<std::int64_t>{0}));
  EXPECT_EQ(window_starts(1000, plan), (std::vector<std::int64_t>{0}));
  EXPECT_TRUE(window_starts(0, plan).empty());
}

TEST(Windows, CutCoversSignal) {
  Waveform w;
  w.samples.assign(2500 * 16, 0.25f);
  const auto windows = cut_windows(w, {});
  ASSERT_EQ(windows.size(), 4u);
  EXPECT_EQ(windows[0].audio.samples.size(), 16000u);
  EXPECT_EQ(windows[3].start_ms, 2400);
  EXPECT_EQ(windows[3].audio.samples.size(), 1600u);
  EXPECT_TRUE(cut_windows(Waveform{}, {}).empty());
}

TEST(Windows, InvalidPlanRejected) {
  WindowPlan p{1000, 0};
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = {1000, 1200};
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(Stitch, SingleWindowIdentity) {
  FrameLabelSequence f;
  for (int i = 0; i < 700; ++i) f.labels.push_back(static_cast<Label>(i % 3));
  const auto out = stitch_predictions({{0, f}}, 700);
  EXPECT_EQ(out.labels, f.labels);
}

TEST(Stitch, DisagreementResolvedTowardNearerCenter) {
  FrameLabelSequence a, b;
  a.labels.assign(1000, Label::Vot);
  b.labels.assign(1000, Label::Vowel);
  const auto out = stitch_predictions({{0, a}, {800, b}}, 1800);
  // Centers at 500 and 1300; frame midpoints 899.5 and 900.5 fall either side.
  EXPECT_EQ(out.labels[899], Label::Vot);
  EXPECT_EQ(out.labels[900], Label::Vowel);
  EXPECT_EQ(out.labels.size(), 1800u);
}

TEST(Stitch, AgreeingWindowsInvariant) {
  FrameLabelSequence a, b;
  for (int i = 0; i < 1000; ++i) a.labels.push_back(static_cast<Label>((i / 50) % 3));
  for (int i = 800; i < 1800; ++i) b.labels.push_back(static_cast<Label>((i / 50) % 3));
  const auto out = stitch_predictions({{0, a}, {800, b}}, 1800);
  for (int i = 0; i < 1800; ++i) EXPECT_EQ(out.labels[i], static_cast<Label>((i / 50) % 3));
}

TEST(Stitch, CoverageGapIsLogicError) {
  FrameLabelSequence a;
  a.labels.assign(100, Label::Other);
  EXPECT_THROW(stitch_predictions({{0, a}}, 200), std::logic_error);
}
