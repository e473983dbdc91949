#include "ddk/synth.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "ddk/random.h"

namespace ddk {

namespace fs = std::filesystem;

namespace {

constexpr int kRate = 16000;
constexpr int kSamplesPerMs = kRate / 1000;
constexpr double kFormant1Hz = 700.0;
constexpr double kFormant2Hz = 1200.0;
constexpr double kFormantWidthHz = 100.0;
constexpr double kMaxHarmonicHz = 7500.0;
constexpr double kRampMs = 10.0;
constexpr double kRiseMs = 3.0;
constexpr double kSpeechPeak = 0.8;

void check_range(const Range& r, const char* name) {
  if (!(r.lo > 0.0 && r.lo <= r.hi)) {
    throw std::invalid_argument(std::string("TrialSpec: ") + name + " range must satisfy 0 < lo <= hi");
  }
}

double resonance(double f, double center) {
  const double d = (f - center) / kFormantWidthHz;
  return 1.0 / (1.0 + d * d);
}

struct Syllable {
  std::int64_t vot_ms = 0;
  std::int64_t vowel_ms = 0;
  std::int64_t gap_ms = 0;  // silence after the vowel (unused for the last)
  double f0_hz = 0.0;
  int consonant = 0;  // 0 flat burst, 1 high-passed, 2 low-passed
};

class CenteredDraw {
 public:
  CenteredDraw(const Range& r, double jitter, Rng& rng)
      : range_(r), center_(rng.uniform(r.lo, r.hi)), spread_(jitter * (r.hi - r.lo)) {}
  double draw(Rng& rng) const {
    return std::clamp(center_ + rng.uniform(-spread_, spread_), range_.lo, range_.hi);
  }

 private:
  Range range_;
  double center_;
  double spread_;
};

std::int64_t round_ms(double v) { return static_cast<std::int64_t>(std::llround(v)); }

void render_burst(std::vector<double>& out, std::int64_t start, const Syllable& s, double gain,
                  Rng& rng) {
  const std::int64_t n = s.vot_ms * kSamplesPerMs;
  std::vector<double> noise(static_cast<std::size_t>(n));
  double prev_in = 0.0, prev_out = 0.0;
  for (double& v : noise) {
    const double x = rng.normal();
    if (s.consonant == 1) {
      v = x - prev_in;
    } else if (s.consonant == 2) {
      v = x + 0.5 * prev_out;
    } else {
      v = x;
    }
    prev_in = x;
    prev_out = v;
  }
  double ss = 0.0;
  for (double v : noise) ss += v * v;
  const double norm = ss > 0.0 ? 1.0 / std::sqrt(ss / static_cast<double>(n)) : 0.0;
  const double tau = std::max(static_cast<double>(s.vot_ms) / 2.0, 1.0);
  for (std::int64_t m = 0; m < n; ++m) {
    const double t = static_cast<double>(m) / kSamplesPerMs;
    const double env = t < kRiseMs ? t / kRiseMs : std::exp(-(t - kRiseMs) / tau);
    out[static_cast<std::size_t>(start + m)] += gain * env * norm * noise[static_cast<std::size_t>(m)];
  }
}

void render_vowel(std::vector<double>& out, std::int64_t start, const Syllable& s, double gain,
                  Rng& rng) {
  const std::int64_t n = s.vowel_ms * kSamplesPerMs;
  const int harmonics = static_cast<int>(kMaxHarmonicHz / s.f0_hz);
  std::vector<double> amp(static_cast<std::size_t>(harmonics));
  std::vector<double> phase(static_cast<std::size_t>(harmonics));
  double power = 0.0;
  for (int k = 1; k <= harmonics; ++k) {
    const double f = k * s.f0_hz;
    const double a = (1.0 + 2.0 * resonance(f, kFormant1Hz) + 1.5 * resonance(f, kFormant2Hz)) / k;
    amp[static_cast<std::size_t>(k - 1)] = a;
    phase[static_cast<std::size_t>(k - 1)] = rng.uniform(0.0, 2.0 * M_PI);
    power += a * a / 2.0;
  }
  const double scale = gain / std::sqrt(power);
  const double ramp = kRampMs * kSamplesPerMs;
  for (std::int64_t m = 0; m < n; ++m) {
    const double t = static_cast<double>(m) / kRate;
    double v = 0.0;
    for (int k = 1; k <= harmonics; ++k) {
      v += amp[static_cast<std::size_t>(k - 1)] *
           std::sin(2.0 * M_PI * k * s.f0_hz * t + phase[static_cast<std::size_t>(k - 1)]);
    }
    double env = 1.0;
    const double from_end = static_cast<double>(n - 1 - m);
    const double edge = std::min(static_cast<double>(m), from_end);
    if (edge < ramp) env = 0.5 - 0.5 * std::cos(M_PI * edge / ramp);
    out[static_cast<std::size_t>(start + m)] += scale * env * v;
  }
}

}  // namespace

void TrialSpec::validate() const {
  if (min_syllables < 1 || min_syllables > max_syllables) {
    throw std::invalid_argument("TrialSpec: need 1 <= min_syllables <= max_syllables");
  }
  check_range(vot_ms, "vot_ms");
  check_range(vowel_ms, "vowel_ms");
  check_range(gap_ms, "gap_ms");
  check_range(f0_hz, "f0_hz");
  check_range(edge_ms, "edge_ms");
  if (vot_ms.lo < 5.0 || vowel_ms.lo < 20.0) {
    throw std::invalid_argument("TrialSpec: VOT must be >= 5 ms and vowels >= 20 ms");
  }
  if (f0_hz.hi * 2.0 > kMaxHarmonicHz) throw std::invalid_argument("TrialSpec: f0 too high");
  if (jitter < 0.0) throw std::invalid_argument("TrialSpec: jitter must be >= 0");
}

Trial generate_trial(const TrialSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  Trial trial;
  const auto count = rng.uniform_int(spec.min_syllables, spec.max_syllables);
  const CenteredDraw vot(spec.vot_ms, spec.jitter, rng);
  const CenteredDraw vowel(spec.vowel_ms, spec.jitter, rng);
  const CenteredDraw gap(spec.gap_ms, spec.jitter, rng);
  const CenteredDraw f0(spec.f0_hz, spec.jitter, rng);
  trial.alternating = rng.uniform() < 0.5;
  const auto first_consonant = static_cast<int>(rng.uniform_int(0, 2));
  const std::int64_t lead = round_ms(rng.uniform(spec.edge_ms.lo, spec.edge_ms.hi));
  const std::int64_t trail = round_ms(rng.uniform(spec.edge_ms.lo, spec.edge_ms.hi));
  const double vowel_gain = rng.uniform(0.08, 0.2);
  const double burst_gain = vowel_gain * rng.uniform(0.4, 0.8);

  std::vector<Syllable> syllables(static_cast<std::size_t>(count));
  for (std::size_t i = 0; i < syllables.size(); ++i) {
    Syllable& s = syllables[i];
    s.vot_ms = round_ms(vot.draw(rng));
    s.vowel_ms = round_ms(vowel.draw(rng));
    s.gap_ms = round_ms(gap.draw(rng));
    s.f0_hz = f0.draw(rng);
    s.consonant = trial.alternating ? (first_consonant + static_cast<int>(i)) % 3 : first_consonant;
    trial.f0_hz.push_back(s.f0_hz);
  }

  std::int64_t t = 0;
  auto add = [&](Label label, std::int64_t ms) {
    trial.segments.push_back({label, t, t + ms});
    t += ms;
  };
  add(Label::Other, lead);
  for (std::size_t i = 0; i < syllables.size(); ++i) {
    add(Label::Vot, syllables[i].vot_ms);
    add(Label::Vowel, syllables[i].vowel_ms);
    add(Label::Other, i + 1 < syllables.size() ? syllables[i].gap_ms : trail);
  }

  std::vector<double> speech(static_cast<std::size_t>(t * kSamplesPerMs), 0.0);
  for (std::size_t i = 0; i < syllables.size(); ++i) {
    const Segment& burst = trial.segments[1 + 3 * i];
    const Segment& nucleus = trial.segments[2 + 3 * i];
    render_burst(speech, burst.onset_ms * kSamplesPerMs, syllables[i], burst_gain, rng);
    render_vowel(speech, nucleus.onset_ms * kSamplesPerMs, syllables[i], vowel_gain, rng);
  }
  double peak = 0.0;
  for (double v : speech) peak = std::max(peak, std::abs(v));
  const double speech_scale = peak > kSpeechPeak ? kSpeechPeak / peak : 1.0;

  const double floor_rms = std::pow(10.0, spec.noise_floor_dbfs / 20.0);
  trial.audio.sample_rate_hz = kRate;
  trial.audio.samples.resize(speech.size());
  for (std::size_t i = 0; i < speech.size(); ++i) {
    const double bg = std::clamp(rng.normal(), -4.0, 4.0) * floor_rms;
    trial.audio.samples[i] = static_cast<float>(speech_scale * speech[i] + bg);
  }
  return trial;
}

void CorpusSpec::validate() const {
  if (trials < 1) throw std::invalid_argument("corpus: need at least one trial");
  if (train_ratio < 0 || val_ratio < 0 || test_ratio < 0 ||
      std::abs(train_ratio + val_ratio + test_ratio - 1.0) > 1e-9) {
    throw std::invalid_argument("corpus: split ratios must be non-negative and sum to 1");
  }
  if (sample_rate_hz < 8000) throw std::invalid_argument("corpus: sample rate must be >= 8000 Hz");
  trial.validate();
}

std::vector<ManifestEntry> generate_corpus(const std::string& dir, const CorpusSpec& spec) {
  spec.validate();
  fs::create_directories(dir);
  const auto n = static_cast<std::size_t>(spec.trials);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng shuffle(Rng::derive(spec.seed, 0xC0FFEE));
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(shuffle.uniform_int(0, static_cast<std::int64_t>(i) - 1));
    std::swap(order[i - 1], order[j]);
  }
  const auto n_train = static_cast<std::size_t>(std::llround(spec.train_ratio * static_cast<double>(n)));
  const auto n_val = std::min(
      n - std::min(n, n_train),
      static_cast<std::size_t>(std::llround(spec.val_ratio * static_cast<double>(n))));
  std::vector<std::string> split(n);
  for (std::size_t r = 0; r < n; ++r) {
    split[order[r]] = r < n_train ? "train" : (r < n_train + n_val ? "val" : "test");
  }

  std::vector<ManifestEntry> entries;
  for (std::size_t i = 0; i < n; ++i) {
    std::ostringstream id;
    id << "trial_" << std::setw(4) << std::setfill('0') << i;
    TrialSpec ts = spec.trial;
    ts.seed = Rng::derive(spec.seed, i);
    const Trial trial = generate_trial(ts);
    ManifestEntry e{id.str(), id.str() + ".wav", id.str() + ".csv", split[i]};
    write_wav((fs::path(dir) / e.wav_path).string(),
              spec.sample_rate_hz == kRate ? trial.audio : resample(trial.audio, spec.sample_rate_hz));
    write_segments_csv((fs::path(dir) / e.labels_path).string(), without_other(trial.segments));
    entries.push_back(e);
  }
  write_manifest((fs::path(dir) / "manifest.csv").string(), entries);
  return entries;
}

void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write manifest " + path);
  out << "trial_id,wav_path,labels_path,split\n";
  for (const auto& e : entries) {
    out << e.trial_id << ',' << e.wav_path << ',' << e.labels_path << ',' << e.split << '\n';
  }
  if (!out) throw DataError("failed writing manifest " + path);
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path);
  const fs::path base = fs::path(path).parent_path();
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty manifest");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "trial_id,wav_path,labels_path,split") {
    throw DataError(path + ": expected header trial_id,wav_path,labels_path,split");
  }
  std::vector<ManifestEntry> entries;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, ',')) cols.push_back(col);
    if (cols.size() != 4) throw DataError(path + ":" + std::to_string(row) + ": expected 4 columns");
    if (cols[3] != "train" && cols[3] != "val" && cols[3] != "test") {
      throw DataError(path + ":" + std::to_string(row) + ": unknown split '" + cols[3] + "'");
    }
    auto resolve = [&](const std::string& p) {
      const fs::path fp(p);
      return (fp.is_absolute() ? fp : base / fp).string();
    };
    entries.push_back({cols[0], resolve(cols[1]), resolve(cols[2]), cols[3]});
  }
  return entries;
}

}  // namespace ddk
