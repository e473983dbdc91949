// Acceptance runner: prints one PASS/FAIL line per criterion and exits
// non-zero if any gating criterion fails. Criterion 6 is a directional
// comparison that is reported either way; a failed ordering is flagged but
// does not set the exit status. Criteria 5-7 train full models and take a
// long time on one core.

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "ddk/metrics.h"
#include "ddk/postproc.h"
#include "ddk/synth.h"
#include "ddk/train.h"
#include "oracles.h"
#include "test_util.h"

using namespace ddk;
using ddk::testing::dot;
using ddk::testing::fill_uniform;
using ddk::testing::model_grad_check;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;
int flagged = 0;

void verdict(int id, const std::string& title, bool pass, const std::string& detail,
             bool gating = true) {
  if (!pass) ++(gating ? failures : flagged);
  std::cout << (pass ? "PASS" : "FAIL") << " criterion " << id << " (" << title << "): " << detail
            << std::endl;
}

std::string num(double v, int precision = 4) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

std::string num(std::optional<double> v, int precision = 4) { return v ? num(*v, precision) : "NA"; }

// ---------------------------------------------------------------- criterion 1

struct Worst {
  double err = 0.0;
  std::string where;

  void add(const std::string& name, const GradCheckResult& r) {
    std::cout << "  grad " << name << ": max_rel " << num(r.max_rel_error, 3) << " over "
              << r.coords_checked << " coords";
    if (r.coords_skipped) std::cout << " (" << r.coords_skipped << " straddling a kink skipped)";
    std::cout << "\n";
    if (r.max_rel_error >= err) err = r.max_rel_error, where = name + ":" + r.worst_param;
  }
};

GradCheckResult check_linear() {
  Linear<double> lin(4, 3);
  Rng rng(3);
  fill_uniform(lin.weight.value, rng);
  fill_uniform(lin.bias.value, rng);
  Param<double> input("input", {5, 4});
  fill_uniform(input.value, rng);
  std::vector<double> c(15);
  fill_uniform(c, rng);
  std::vector<Param<double>*> ps = {&lin.weight, &lin.bias, &input};
  return grad_check(ps, [&](bool with_grad) {
    if (with_grad) for (auto* p : ps) p->zero_grad();
    const auto y = lin.forward(input.value, 5);
    if (with_grad) input.grad = lin.backward(c);
    return dot(y, c);
  });
}

GradCheckResult check_conv_stack(int stride, int dilation, Mode bn_mode) {
  Conv1d<double> conv(ConvSpec::length_preserving(2, 3, 5, stride, dilation));
  BatchNorm1d<double> bn(3);
  LeakyRelu<double> act(0.01);
  Rng rng(static_cast<std::uint64_t>(10 * stride + dilation));
  fill_uniform(conv.weight.value, rng);
  fill_uniform(conv.bias.value, rng);
  fill_uniform(bn.weight.value, rng, 0.5, 1.5);
  fill_uniform(bn.bias.value, rng);
  fill_uniform(bn.running_mean.value, rng);
  fill_uniform(bn.running_var.value, rng, 0.5, 2.0);
  const int B = 2, L = 24, out_len = L / stride;
  Param<double> input("input", {B, 2, L});
  fill_uniform(input.value, rng);
  std::vector<double> c(static_cast<std::size_t>(B * 3 * out_len));
  fill_uniform(c, rng);
  std::vector<Param<double>*> ps = {&conv.weight, &conv.bias, &bn.weight, &bn.bias, &input};
  return grad_check(ps, [&](bool with_grad) {
    if (with_grad) for (auto* p : ps) p->zero_grad();
    Tensor3<double> x(B, 2, L);
    x.data = input.value;
    auto h = bn.forward(conv.forward(x), bn_mode);
    act.forward(h.data);
    const double loss = dot(h.data, c);
    if (with_grad) {
      Tensor3<double> dy(h.batch, h.channels, h.length);
      dy.data = c;
      act.backward(dy.data);
      input.grad = conv.backward(bn.backward(dy)).data;
    }
    return loss;
  });
}

GradCheckResult check_dropout() {
  Dropout<double> drop(0.3);
  Param<double> input("input", {20});
  Rng rng(7);
  fill_uniform(input.value, rng);
  std::vector<double> c(20);
  fill_uniform(c, rng);
  std::vector<Param<double>*> ps = {&input};
  return grad_check(ps, [&](bool with_grad) {
    Rng mask_rng(99);
    std::vector<double> y = input.value;
    drop.forward(y, Mode::Train, mask_rng);
    if (with_grad) {
      std::vector<double> dy = c;
      drop.backward(dy);
      input.grad = dy;
    }
    return dot(y, c);
  });
}

GradCheckResult check_bilstm() {
  const int T = 4, B = 2, I = 3, H = 3;
  BiLstm<double> l1(I, H), l2(2 * H, H);
  Rng rng(12);
  for (auto* p : l1.params()) fill_uniform(p->value, rng, -0.5, 0.5);
  for (auto* p : l2.params()) fill_uniform(p->value, rng, -0.5, 0.5);
  Param<double> input("input", {T, B, I});
  fill_uniform(input.value, rng);
  std::vector<double> c(static_cast<std::size_t>(T) * B * 2 * H);
  fill_uniform(c, rng);
  std::vector<Param<double>*> ps;
  for (auto* p : l1.params()) ps.push_back(p);
  for (auto* p : l2.params()) ps.push_back(p);
  ps.push_back(&input);
  return grad_check(ps, [&](bool with_grad) {
    if (with_grad) for (auto* p : ps) p->zero_grad();
    Sequence<double> x(T, B, I);
    x.data = input.value;
    const auto y = l2.forward(l1.forward(x));
    if (with_grad) {
      Sequence<double> dy(T, B, 2 * H);
      dy.data = c;
      input.grad = l1.backward(l2.backward(dy)).data;
    }
    return dot(y.data, c);
  });
}

GradCheckResult check_xent() {
  Param<double> logits("logits", {8, 3});
  Rng rng(13);
  fill_uniform(logits.value, rng, -3.0, 3.0);
  const std::vector<int> labels = {0, 1, 2, -1, 1, 0, 2, 2};
  const std::vector<double> w = {1.0, 3.0, 1.5};
  std::vector<Param<double>*> ps = {&logits};
  return grad_check(ps, [&](bool with_grad) {
    const auto r = softmax_xent<double>(logits.value, labels, 3, w);
    if (with_grad) logits.grad = r.grad;
    return r.loss;
  });
}

ModelConfig two_conv_lstm() {
  ModelConfig c;
  c.architecture = Architecture::Lstm;
  c.conv = {{4, 5, 4, 1}, {5, 5, 4, 1}};
  c.lstm_hidden = 3;
  c.lstm_layers = 2;
  c.fc_hidden = 5;
  return c;
}

ModelConfig two_conv_cnn() {
  ModelConfig c;
  c.architecture = Architecture::Cnn;
  c.conv = {{4, 5, 4, 1}, {5, 5, 4, 2}};
  c.lstm_hidden = 0;
  c.lstm_layers = 0;
  c.fc_hidden = 6;
  return c;
}

void criterion_gradients() {
  const auto t0 = Clock::now();
  Worst layers;
  layers.add("linear", check_linear());
  layers.add("conv+bn(eval)+leaky", check_conv_stack(2, 1, Mode::Eval));
  layers.add("dilated conv+bn(eval)", check_conv_stack(1, 3, Mode::Eval));
  layers.add("conv+bn(train)", check_conv_stack(4, 1, Mode::Train));
  layers.add("dropout", check_dropout());
  layers.add("bilstm x2", check_bilstm());
  layers.add("softmax xent", check_xent());

  // Models: extended precision for the verdict, double reported alongside.
  Worst models, doubles;
  struct Case {
    std::string name;
    ModelConfig cfg;
    bool standard;
    std::size_t coords;
  };
  const std::vector<Case> cases = {{"lstm 2-conv clone", two_conv_lstm(), false, 0},
                                   {"cnn 2-conv clone", two_conv_cnn(), false, 0},
                                   {"lstm default", ModelConfig::default_lstm(), true, 12},
                                   {"cnn default", ModelConfig::default_cnn(), true, 12}};
  for (const auto& c : cases) {
    Model<long double> ml(c.cfg, 31, c.standard);
    models.add(c.name + " (extended)", model_grad_check(ml, 64, 2, 41, c.coords));
    Model<double> md(c.cfg, 31, c.standard);
    doubles.add(c.name + " (double)", model_grad_check(md, 64, 2, 41, c.coords));
  }
  const double secs = seconds_since(t0);
  const bool pass = layers.err < 1e-4 && models.err < 1e-4 && secs < 120.0;
  verdict(1, "gradient correctness", pass,
          "layers(double) max_rel " + num(layers.err, 3) + " at " + layers.where +
              "; models(extended) max_rel " + num(models.err, 3) + " at " + models.where +
              "; models(double) max_rel " + num(doubles.err, 3) + " at " + doubles.where + "; " +
              num(secs, 3) + " s");
}

// ---------------------------------------------------------------- criterion 2

void criterion_postprocess() {
  const auto t0 = Clock::now();
  Rng rng(2025);
  int mismatches = 0, not_idempotent = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const auto n = rng.uniform_int(1, 2000);
    const auto max_run = rng.uniform() < 0.5 ? 30 : 120;
    std::vector<Label> f;
    while (static_cast<std::int64_t>(f.size()) < n) {
      const auto l = static_cast<Label>(rng.uniform_int(0, 2));
      f.insert(f.end(), static_cast<std::size_t>(rng.uniform_int(1, max_run)), l);
    }
    f.resize(static_cast<std::size_t>(n));
    const auto got = postprocess(f);
    mismatches += got != oracle::postprocess(f);
    not_idempotent += postprocess(rasterize(got, n)) != got;
  }
  const double secs = seconds_since(t0);
  verdict(2, "post-processing oracle", mismatches == 0 && not_idempotent == 0 && secs < 60.0,
          "10000 sequences, " + std::to_string(mismatches) + " oracle mismatches, " +
              std::to_string(not_idempotent) + " idempotence failures; " + num(secs, 3) + " s");
}

// ---------------------------------------------------------------- criterion 3

bool near(std::optional<double> got, double want, double tol) {
  if (std::isnan(want)) return !got;
  return got && std::abs(*got - want) <= tol;
}

void criterion_metrics() {
  const auto t0 = Clock::now();
  constexpr double tol = 1e-9;
  Rng rng(31337);
  int bad_match = 0, bad_f1 = 0, bad_mad = 0, bad_dur = 0, bad_trim = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto target = oracle::random_segments(rng, 40);
    const auto pred = oracle::perturb(target, rng);
    const auto m = match_segments(pred, target);
    const auto o = oracle::match(pred, target);

    bool same = m.pairs.size() == o.pairs.size() && m.misses == o.misses &&
                m.false_alarms == o.false_alarms;
    for (std::size_t k = 0; same && k < o.pairs.size(); ++k) {
      same = m.pairs[k].pred_index == o.pairs[k].first && m.pairs[k].target_index == o.pairs[k].second;
    }
    bad_match += !same;

    const auto f = f1_scores(m);
    const auto fv = oracle::f1(pred, target, o, Label::Vot);
    const auto fw = oracle::f1(pred, target, o, Label::Vowel);
    bad_f1 += std::abs(f.vot.f1 - fv.f1) > tol || std::abs(f.vowel.f1 - fw.f1) > tol ||
              std::abs(f.vot.precision - fv.precision) > tol ||
              std::abs(f.vowel.recall - fw.recall) > tol;

    const auto mad = boundary_mad(m);
    const auto om = oracle::mad(pred, target, o);
    bad_mad += !near(mad.vot_onset, om[0], tol) || !near(mad.vot_offset_vowel_onset, om[1], tol) ||
               !near(mad.vowel_offset, om[2], tol);

    const auto d = duration_stats(m);
    for (auto [got, label] : {std::pair{d.vot, Label::Vot}, std::pair{d.vowel, Label::Vowel}}) {
      const auto want = oracle::durations(pred, target, o, label);
      if (got.has_value() != want.r.has_value()) {
        ++bad_dur;
      } else if (got && (std::abs(got->pearson_r - *want.r) > tol || std::abs(got->mae_s - want.mae) > tol)) {
        ++bad_dur;
      }
    }

    std::vector<double> v(static_cast<std::size_t>(rng.uniform_int(1, 400)));
    for (double& x : v) x = static_cast<double>(rng.uniform_int(1, 300)) / 1000.0;
    bad_trim += trim_outliers(v) != oracle::trim(v);
  }
  const double secs = seconds_since(t0);
  const bool pass = bad_match + bad_f1 + bad_mad + bad_dur + bad_trim == 0 && secs < 60.0;
  verdict(3, "metric oracles", pass,
          "1000 instances; disagreements: match " + std::to_string(bad_match) + ", f1 " +
              std::to_string(bad_f1) + ", mad " + std::to_string(bad_mad) + ", durations " +
              std::to_string(bad_dur) + ", trim " + std::to_string(bad_trim) + "; " + num(secs, 3) + " s");
}

// ---------------------------------------------------------------- criterion 4

SegmentSequence syllables(const std::vector<std::int64_t>& vowel_ms) {
  SegmentSequence s;
  std::int64_t t = 200;
  for (auto v : vowel_ms) {
    s.push_back({Label::Vot, t, t + 30});
    s.push_back({Label::Vowel, t + 30, t + 30 + v});
    t += 30 + v + 100;
  }
  return s;
}

SegmentSequence vot_train(const std::vector<std::int64_t>& gaps) {
  SegmentSequence s;
  std::int64_t t = 0;
  s.push_back({Label::Vot, t, t + 30});
  for (auto g : gaps) {
    t += g;
    s.push_back({Label::Vot, t, t + 30});
  }
  return s;
}

void criterion_rate() {
  std::vector<std::string> problems;
  // Ground-truth synthetic trials: count and time straight from the segments.
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    TrialSpec spec;
    spec.seed = seed;
    const auto segs = without_other(generate_trial(spec).segments);
    std::int64_t vots = 0, vowel_sum = 0, vowel_n = 0, first = -1, last = 0;
    for (const auto& s : segs) {
      if (s.label == Label::Vot) {
        ++vots;
        if (first < 0) first = s.onset_ms;
      } else {
        vowel_sum += s.duration_ms(), ++vowel_n, last = s.offset_ms;
      }
    }
    std::int64_t extra = 0;
    for (const auto& s : segs) extra += s.label == Label::Vowel && s.duration_ms() * vowel_n > 2 * vowel_sum;
    const double want = static_cast<double>(vots + extra) / (static_cast<double>(last - first) / 1000.0);
    const auto got = ddk_rate(segs);
    if (!got || got->rate != want || *oracle::rate(segs) != want) {
      problems.push_back("synthetic seed " + std::to_string(seed));
    }
  }

  // Vowel split: 250 ms against nine 100 ms vowels (mean 115) adds one at
  // that vowel; 225 ms sits exactly at twice the mean (112.5) and does not.
  std::vector<std::int64_t> v(10, 100);
  v[6] = 250;
  auto r = ddk_rate(syllables(v));
  if (!r || r->count.corrected_count != 11.0 || r->count.corrections.size() != 1 ||
      r->count.corrections[0].segment_index != 13) {
    problems.push_back("vowel split fires");
  }
  v[6] = 225;
  r = ddk_rate(syllables(v));
  if (!r || !r->count.corrections.empty() || r->count.corrected_count != 10.0) {
    problems.push_back("vowel split at threshold");
  }

  // Inter-VOT: eight 700 ms gaps and one 1700 ms gap (mean 800) add one at
  // the VOT after the gap; 1600 ms is exactly twice its mean (800).
  std::vector<std::int64_t> g(9, 700);
  g[4] = 1700;
  auto q = ddk_rate_vot_only(vot_train(g), {0.0, 8.0});
  if (!q || q->count.corrected_count != 11.0 || q->count.corrections.size() != 1 ||
      q->count.corrections[0].segment_index != 5 || q->rate != 11.0 / 8.0) {
    problems.push_back("inter-VOT gap fires");
  }
  g[4] = 1600;
  q = ddk_rate_vot_only(vot_train(g), {0.0, 8.0});
  if (!q || !q->count.corrections.empty()) problems.push_back("inter-VOT gap at threshold");

  // Explicit window replaces the articulation time; no VOT is undefined.
  r = ddk_rate(syllables(std::vector<std::int64_t>(10, 100)), TimeWindow{1.0, 5.0});
  if (!r || r->rate != 10.0 / 4.0) problems.push_back("window");
  if (ddk_rate(SegmentSequence{{Label::Vowel, 0, 100}})) problems.push_back("undefined without VOT");

  std::string detail = "100 synthetic trials exact, corrections on constructed cases";
  if (!problems.empty()) {
    detail = "failed:";
    for (const auto& p : problems) detail += " [" + p + "]";
  }
  verdict(4, "DDK rate", problems.empty(), detail);
}

// ------------------------------------------------------------ criteria 5-7

struct RunOutcome {
  std::vector<EpochLog> log;
  int best_epoch = 0;
  double best_val_acc = 0.0;
  EvalReport report;
  double frame_acc = 0.0;
  double gain_up_acc = 0.0;
  double gain_down_acc = 0.0;
  double silence_other = 0.0;
  bool silence_header_only = false;
  double train_seconds = 0.0;
  double total_seconds = 0.0;
};

Waveform scaled(const Waveform& w, double gain) {
  Waveform out = w;
  constexpr float top = 32767.0f / 32768.0f;
  for (float& s : out.samples) s = std::clamp(static_cast<float>(s * gain), -1.0f, top);
  return out;
}

double pooled_accuracy(Model<float>& model, const std::vector<LabeledAudio>& set, double gain,
                       std::vector<FrameLabelSequence>* keep = nullptr) {
  std::int64_t right = 0, total = 0;
  for (const auto& rec : set) {
    auto pred = predict_file(model, gain == 1.0 ? rec.audio : scaled(rec.audio, gain));
    const auto truth = rasterize(rec.segments, static_cast<std::int64_t>(pred.size()));
    for (std::size_t k = 0; k < truth.size(); ++k) right += pred.labels[k] == truth[k];
    total += static_cast<std::int64_t>(truth.size());
    if (keep) keep->push_back(std::move(pred));
  }
  return static_cast<double>(right) / static_cast<double>(total);
}

// Synthesizes the corpus, trains, and evaluates on the test split.
RunOutcome run_protocol(const fs::path& dir, Architecture arch, std::uint64_t seed) {
  const auto t0 = Clock::now();
  CorpusSpec corpus;
  corpus.trials = 200;
  corpus.seed = seed;
  generate_corpus((dir / "corpus").string(), corpus);
  const auto manifest = read_manifest((dir / "corpus" / "manifest.csv").string());
  const auto train_set = load_split(manifest, "train");
  const auto val_set = load_split(manifest, "val");
  const auto test_set = load_split(manifest, "test");

  TrainConfig cfg;
  cfg.seed = seed;
  const ModelConfig model_cfg =
      arch == Architecture::Lstm ? ModelConfig::default_lstm() : ModelConfig::default_cnn();
  const auto t1 = Clock::now();
  auto result = train(train_set, val_set, cfg, model_cfg, [&](const EpochLog& e) {
    std::cout << "  " << architecture_name(arch) << " epoch " << e.epoch << " train_loss "
              << num(e.train_loss) << " val_loss " << num(e.val_loss) << " val_acc "
              << num(e.val_frame_acc) << " (" << num(seconds_since(t1), 4) << " s)" << std::endl;
  });

  RunOutcome out;
  out.train_seconds = seconds_since(t1);
  out.log = result.log;
  out.best_epoch = result.best_epoch;
  out.best_val_acc = result.best_val_acc;

  std::vector<FrameLabelSequence> preds;
  out.frame_acc = pooled_accuracy(result.model, test_set, 1.0, &preds);
  std::vector<TrialInput> trials;
  for (std::size_t i = 0; i < test_set.size(); ++i) {
    trials.push_back({test_set[i].id, without_other(postprocess(preds[i].labels)),
                      without_other(test_set[i].segments), std::nullopt});
  }
  out.report = evaluate(trials);
  out.total_seconds = seconds_since(t0);

  out.gain_up_acc = pooled_accuracy(result.model, test_set, std::pow(10.0, 6.0 / 20.0));
  out.gain_down_acc = pooled_accuracy(result.model, test_set, std::pow(10.0, -6.0 / 20.0));

  Waveform silence;
  silence.samples.assign(16000 * 2, 0.0f);
  const auto quiet = predict_file(result.model, silence);
  out.silence_other = static_cast<double>(std::count(quiet.labels.begin(), quiet.labels.end(), Label::Other)) /
                      static_cast<double>(quiet.size());
  std::ostringstream csv;
  write_segments_csv(csv, without_other(postprocess(quiet.labels)));
  out.silence_header_only = csv.str() == "onset_ms,offset_ms,label\n";
  return out;
}

std::string summary(const RunOutcome& r) {
  const auto& e = r.report;
  std::ostringstream s;
  s << "frame_acc " << num(r.frame_acc) << ", vot_f1 " << num(e.f1.vot.f1) << ", vowel_f1 "
    << num(e.f1.vowel.f1) << ", mad_ms " << num(e.mad.vot_onset, 3) << "/"
    << num(e.mad.vot_offset_vowel_onset, 3) << "/" << num(e.mad.vowel_offset, 3) << ", dur_r vot "
    << num(e.durations.vot ? std::optional(e.durations.vot->pearson_r) : std::nullopt) << " vowel "
    << num(e.durations.vowel ? std::optional(e.durations.vowel->pearson_r) : std::nullopt)
    << ", rate_r " << num(e.rate_pearson) << " mae " << num(e.rate_mae) << ", epochs "
    << r.log.size() << " (best " << r.best_epoch << ", val_acc " << num(r.best_val_acc)
    << "), runtime " << num(r.total_seconds / 60.0, 3) << " min";
  return s.str();
}

bool meets_thresholds(const RunOutcome& r) {
  const auto& e = r.report;
  auto at_most = [](std::optional<double> v, double lim) { return v && *v <= lim; };
  auto at_least = [](std::optional<double> v, double lim) { return v && *v >= lim; };
  return r.frame_acc >= 0.95 && e.f1.vot.f1 >= 0.95 && e.f1.vowel.f1 >= 0.95 &&
         at_most(e.mad.vot_onset, 10.0) && at_most(e.mad.vot_offset_vowel_onset, 10.0) &&
         at_most(e.mad.vowel_offset, 10.0) && e.durations.vot && e.durations.vot->pearson_r >= 0.85 &&
         e.durations.vowel && e.durations.vowel->pearson_r >= 0.85 &&
         at_least(e.rate_pearson, 0.95) && at_most(e.rate_mae, 0.2);
}

// Every number of a run as raw bits, undefined values as a NaN marker.
std::vector<std::uint64_t> fingerprint(const RunOutcome& r) {
  std::vector<std::uint64_t> bits;
  auto put = [&](std::optional<double> v) {
    bits.push_back(std::bit_cast<std::uint64_t>(v ? *v : std::nan("")));
  };
  for (const auto& e : r.log) put(e.train_loss), put(e.val_loss), put(e.val_frame_acc);
  const auto& e = r.report;
  put(r.frame_acc);
  for (const auto* l : {&e.f1.vot, &e.f1.vowel}) put(l->precision), put(l->recall), put(l->f1);
  put(e.mad.vot_onset), put(e.mad.vot_offset_vowel_onset), put(e.mad.vowel_offset);
  for (const auto& d : {e.durations.vot, e.durations.vowel}) {
    put(d ? std::optional(d->pearson_r) : std::nullopt);
    put(d ? std::optional(d->mae_s) : std::nullopt);
  }
  for (const auto& t : e.rates) put(t.pred_rate), put(t.target_rate);
  put(e.rate_pearson), put(e.rate_mae);
  return bits;
}

}  // namespace

int main() {
  std::cout << std::unitbuf;
  criterion_gradients();
  criterion_postprocess();
  criterion_metrics();
  criterion_rate();

  const fs::path dir = fs::temp_directory_path() / ("ddk_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  constexpr std::uint64_t seed = 20240917;

  const auto lstm = run_protocol(dir / "lstm", Architecture::Lstm, seed);
  const bool thresholds = meets_thresholds(lstm);
  const bool silence = lstm.silence_other >= 0.95 && lstm.silence_header_only;
  const bool fast = lstm.total_seconds <= 30.0 * 60.0;
  verdict(5, "end-to-end synthetic run", thresholds && silence && fast,
          summary(lstm) + "; silence other " + num(lstm.silence_other) +
              (lstm.silence_header_only ? " header-only csv" : " with segments") +
              "; gain +6 dB acc " + num(lstm.gain_up_acc) + " (drop " +
              num(lstm.frame_acc - lstm.gain_up_acc, 3) + "), -6 dB acc " +
              num(lstm.gain_down_acc) + " (drop " + num(lstm.frame_acc - lstm.gain_down_acc, 3) + ")");

  const auto cnn = run_protocol(dir / "cnn", Architecture::Cnn, seed);
  const auto lstm_off = lstm.report.mad.vowel_offset;
  const auto cnn_off = cnn.report.mad.vowel_offset;
  const bool ordered = lstm_off && cnn_off && *lstm_off <= *cnn_off;
  verdict(6, "architecture comparison, reported only", ordered,
          std::string(ordered ? "" : "DEVIATION: lstm is not at or below cnn; ") +
              "vowel-offset MAD lstm " + num(lstm_off, 4) + " ms vs cnn " + num(cnn_off, 4) +
              " ms; cnn: " + summary(cnn),
          false);

  const auto again = run_protocol(dir / "lstm_repeat", Architecture::Lstm, seed);
  std::ostringstream la, lb;
  write_training_log(la, lstm.log);
  write_training_log(lb, again.log);
  const bool same = la.str() == lb.str() && fingerprint(lstm) == fingerprint(again);
  verdict(7, "determinism", same,
          same ? "repeat run reproduced " + std::to_string(again.log.size()) +
                     " log rows and all report numbers bit-identically"
               : "repeat run differs");

  fs::remove_all(dir);
  std::cout << (failures == 0 ? "all gating criteria passed"
                             : std::to_string(failures) + " gating criteria failed");
  if (flagged) std::cout << "; " << flagged << " reported-only deviation flagged";
  std::cout << std::endl;
  return failures == 0 ? 0 : 1;
}
