#include "ddk/metrics.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

namespace ddk {

std::optional<RateResult> ddk_rate(const SegmentSequence& segs,
                                   std::optional<TimeWindow> window) {
  std::int64_t vots = 0;
  std::int64_t first_vot_onset = std::numeric_limits<std::int64_t>::max();
  std::int64_t last_vowel_offset = std::numeric_limits<std::int64_t>::min();
  std::vector<std::size_t> vowels;
  for (std::size_t i = 0; i < segs.size(); ++i) {
    if (segs[i].label == Label::Vot) {
      ++vots;
      first_vot_onset = std::min(first_vot_onset, segs[i].onset_ms);
    } else if (segs[i].label == Label::Vowel) {
      vowels.push_back(i);
      last_vowel_offset = std::max(last_vowel_offset, segs[i].offset_ms);
    }
  }
  if (vots == 0 || vowels.empty()) return std::nullopt;

  RateResult r;
  r.count.raw_count = vots;
  double mean = 0.0;
  for (std::size_t i : vowels) mean += static_cast<double>(segs[i].duration_ms());
  mean /= static_cast<double>(vowels.size());
  for (std::size_t i : vowels) {
    if (static_cast<double>(segs[i].duration_ms()) > 2.0 * mean) {
      r.count.corrections.push_back({i, "vowel longer than twice the mean vowel"});
    }
  }
  r.count.corrected_count =
      static_cast<double>(vots) + static_cast<double>(r.count.corrections.size());
  r.articulation_s = window ? window->second - window->first
                            : static_cast<double>(last_vowel_offset - first_vot_onset) / 1000.0;
  if (!(r.articulation_s > 0.0)) return std::nullopt;
  r.rate = r.count.corrected_count / r.articulation_s;
  return r;
}

std::optional<RateResult> ddk_rate_vot_only(const SegmentSequence& vot_segments,
                                            TimeWindow window) {
  std::vector<std::pair<std::int64_t, std::size_t>> onsets;
  for (std::size_t i = 0; i < vot_segments.size(); ++i) {
    if (vot_segments[i].label == Label::Vot) onsets.emplace_back(vot_segments[i].onset_ms, i);
  }
  if (onsets.size() < 2) return std::nullopt;
  std::sort(onsets.begin(), onsets.end());
  RateResult r;
  r.count.raw_count = static_cast<std::int64_t>(onsets.size());
  const double mean = static_cast<double>(onsets.back().first - onsets.front().first) /
                      static_cast<double>(onsets.size() - 1);
  for (std::size_t i = 1; i < onsets.size(); ++i) {
    const auto gap = static_cast<double>(onsets[i].first - onsets[i - 1].first);
    if (gap > 2.0 * mean) {
      r.count.corrections.push_back({onsets[i].second, "inter-VOT gap longer than twice the mean"});
    }
  }
  r.count.corrected_count =
      static_cast<double>(r.count.raw_count) + static_cast<double>(r.count.corrections.size());
  r.articulation_s = window.second - window.first;
  if (!(r.articulation_s > 0.0)) return std::nullopt;
  r.rate = r.count.corrected_count / r.articulation_s;
  return r;
}

std::int64_t overlap_ms(const Segment& a, const Segment& b) {
  return std::max<std::int64_t>(
      0, std::min(a.offset_ms, b.offset_ms) - std::max(a.onset_ms, b.onset_ms));
}

namespace {

bool scored(Label l) { return l == Label::Vot || l == Label::Vowel; }

}  // namespace

MatchedPairs match_segments(const SegmentSequence& pred, const SegmentSequence& target) {
  MatchedPairs m;
  m.pred = pred;
  m.target = target;
  std::vector<bool> taken(target.size(), false);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const Segment& p = pred[i];
    if (!scored(p.label)) continue;
    std::optional<std::size_t> best;
    std::int64_t best_cost = 0;
    std::int64_t best_overlap = 0;
    for (std::size_t j = 0; j < target.size(); ++j) {
      const Segment& t = target[j];
      if (taken[j] || t.label != p.label) continue;
      const std::int64_t cost =
          std::abs(p.onset_ms - t.onset_ms) + std::abs(p.offset_ms - t.offset_ms);
      const std::int64_t ov = overlap_ms(p, t);
      if (!best || cost < best_cost || (cost == best_cost && ov > best_overlap)) {
        best = j;
        best_cost = cost;
        best_overlap = ov;
      }
    }
    if (best && best_overlap > 0) {
      taken[*best] = true;
      m.pairs.push_back({i, *best, p, target[*best]});
    } else {
      m.false_alarms.push_back(i);
    }
  }
  for (std::size_t j = 0; j < target.size(); ++j) {
    if (!taken[j] && scored(target[j].label)) m.misses.push_back(j);
  }
  return m;
}

void append_matches(MatchedPairs& pool, const MatchedPairs& trial) {
  const std::size_t pred_base = pool.pred.size();
  const std::size_t target_base = pool.target.size();
  pool.pred.insert(pool.pred.end(), trial.pred.begin(), trial.pred.end());
  pool.target.insert(pool.target.end(), trial.target.begin(), trial.target.end());
  for (MatchedPair p : trial.pairs) {
    p.pred_index += pred_base;
    p.target_index += target_base;
    pool.pairs.push_back(p);
  }
  for (std::size_t j : trial.misses) pool.misses.push_back(j + target_base);
  for (std::size_t i : trial.false_alarms) pool.false_alarms.push_back(i + pred_base);
}

namespace {

LabelScores score_label(const MatchedPairs& m, Label label) {
  LabelScores s;
  for (const auto& p : m.pairs) s.matched += p.pred.label == label;
  for (std::size_t i : m.false_alarms) s.false_alarms += m.pred[i].label == label;
  for (std::size_t j : m.misses) s.misses += m.target[j].label == label;
  const double tp = static_cast<double>(s.matched);
  const double pdenom = tp + static_cast<double>(s.false_alarms);
  const double rdenom = tp + static_cast<double>(s.misses);
  s.degenerate = pdenom == 0.0 && rdenom == 0.0;
  s.precision = pdenom > 0.0 ? tp / pdenom : 0.0;
  s.recall = rdenom > 0.0 ? tp / rdenom : 0.0;
  s.f1 = s.precision + s.recall > 0.0
             ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
             : 0.0;
  return s;
}

}  // namespace

F1Scores f1_scores(const MatchedPairs& m) {
  return {score_label(m, Label::Vot), score_label(m, Label::Vowel)};
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const double pos = p / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

std::vector<std::size_t> trim_outliers(const std::vector<double>& durations) {
  std::vector<std::size_t> keep;
  if (durations.empty()) return keep;
  const double low = percentile(durations, 2.0);
  const double high = percentile(durations, 95.0);
  for (std::size_t i = 0; i < durations.size(); ++i) {
    if (durations[i] >= low && durations[i] <= high) keep.push_back(i);
  }
  return keep;
}

std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) return std::nullopt;
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

namespace {

std::optional<DurationStats> label_durations(const MatchedPairs& m, Label label) {
  std::vector<double> pd, td;
  for (const auto& p : m.pairs) {
    if (p.pred.label != label) continue;
    pd.push_back(static_cast<double>(p.pred.duration_ms()) / 1000.0);
    td.push_back(static_cast<double>(p.target.duration_ms()) / 1000.0);
  }
  const auto keep_p = trim_outliers(pd);
  const auto keep_t = trim_outliers(td);
  std::vector<bool> in_p(pd.size(), false), in_t(td.size(), false);
  for (std::size_t i : keep_p) in_p[i] = true;
  for (std::size_t i : keep_t) in_t[i] = true;
  std::vector<double> xs, ys;
  double abs_err = 0.0;
  for (std::size_t i = 0; i < pd.size(); ++i) {
    if (!in_p[i] || !in_t[i]) continue;
    xs.push_back(pd[i]);
    ys.push_back(td[i]);
    abs_err += std::abs(pd[i] - td[i]);
  }
  if (xs.size() < 3) return std::nullopt;
  const auto r = pearson(xs, ys);
  if (!r) return std::nullopt;
  return DurationStats{*r, abs_err / static_cast<double>(xs.size()), xs.size()};
}

std::optional<double> mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

DurationReport duration_stats(const MatchedPairs& m) {
  return {label_durations(m, Label::Vot), label_durations(m, Label::Vowel)};
}

BoundaryMad boundary_mad(const MatchedPairs& m) {
  std::vector<double> onset, middle, offset;
  for (const auto& p : m.pairs) {
    const auto d_on = static_cast<double>(std::abs(p.pred.onset_ms - p.target.onset_ms));
    const auto d_off = static_cast<double>(std::abs(p.pred.offset_ms - p.target.offset_ms));
    if (p.pred.label == Label::Vot) {
      onset.push_back(d_on);
      middle.push_back(d_off);
    } else if (p.pred.label == Label::Vowel) {
      middle.push_back(d_on);
      offset.push_back(d_off);
    }
  }
  return {mean_of(onset), mean_of(middle), mean_of(offset)};
}

EvalReport evaluate(const std::vector<TrialInput>& trials) {
  EvalReport r;
  r.trials = trials.size();
  MatchedPairs pool;
  std::vector<double> pr, tr;
  double abs_err = 0.0;
  for (const TrialInput& t : trials) {
    append_matches(pool, match_segments(t.pred, t.target));
    TrialRates rates{t.name, std::nullopt, std::nullopt};
    if (auto p = ddk_rate(t.pred, t.window)) rates.pred_rate = p->rate;
    if (auto g = ddk_rate(t.target, t.window)) rates.target_rate = g->rate;
    if (rates.pred_rate && rates.target_rate) {
      pr.push_back(*rates.pred_rate);
      tr.push_back(*rates.target_rate);
      abs_err += std::abs(*rates.pred_rate - *rates.target_rate);
    }
    r.rates.push_back(rates);
  }
  r.f1 = f1_scores(pool);
  r.mad = boundary_mad(pool);
  r.durations = duration_stats(pool);
  r.rate_pearson = pearson(pr, tr);
  if (!pr.empty()) r.rate_mae = abs_err / static_cast<double>(pr.size());
  return r;
}

namespace {

std::string fmt(std::optional<double> v, int precision = 6) {
  if (!v) return "NA";
  std::ostringstream s;
  s << std::setprecision(precision) << *v;
  return s.str();
}

}  // namespace

void write_report_csv(std::ostream& out, const EvalReport& r) {
  out << "metric,value\n";
  out << "trials," << r.trials << "\n";
  const std::pair<const char*, const LabelScores*> labels[] = {{"vot", &r.f1.vot},
                                                                {"vowel", &r.f1.vowel}};
  for (const auto& [name, s] : labels) {
    out << name << "_matched," << s->matched << "\n";
    out << name << "_false_alarms," << s->false_alarms << "\n";
    out << name << "_misses," << s->misses << "\n";
    out << name << "_precision," << fmt(s->precision) << "\n";
    out << name << "_recall," << fmt(s->recall) << "\n";
    out << name << "_f1," << fmt(s->f1) << "\n";
  }
  out << "mad_vot_onset_ms," << fmt(r.mad.vot_onset) << "\n";
  out << "mad_vot_offset_vowel_onset_ms," << fmt(r.mad.vot_offset_vowel_onset) << "\n";
  out << "mad_vowel_offset_ms," << fmt(r.mad.vowel_offset) << "\n";
  auto dur = [](const std::optional<DurationStats>& d, bool want_r) -> std::optional<double> {
    if (!d) return std::nullopt;
    return want_r ? d->pearson_r : d->mae_s;
  };
  out << "vot_duration_r," << fmt(dur(r.durations.vot, true)) << "\n";
  out << "vot_duration_mae_s," << fmt(dur(r.durations.vot, false)) << "\n";
  out << "vowel_duration_r," << fmt(dur(r.durations.vowel, true)) << "\n";
  out << "vowel_duration_mae_s," << fmt(dur(r.durations.vowel, false)) << "\n";
  out << "rate_r," << fmt(r.rate_pearson) << "\n";
  out << "rate_mae," << fmt(r.rate_mae) << "\n";
}

void print_report(std::ostream& out, const EvalReport& r) {
  out << "trials: " << r.trials << "\n";
  out << std::left << std::setw(8) << "label" << std::setw(10) << "matched" << std::setw(8)
      << "FA" << std::setw(8) << "miss" << std::setw(11) << "precision" << std::setw(9)
      << "recall" << "F1\n";
  const std::pair<const char*, const LabelScores*> labels[] = {{"VOT", &r.f1.vot},
                                                                {"vowel", &r.f1.vowel}};
  for (const auto& [name, s] : labels) {
    out << std::setw(8) << name << std::setw(10) << s->matched << std::setw(8)
        << s->false_alarms << std::setw(8) << s->misses << std::setw(11)
        << fmt(s->precision, 4) << std::setw(9) << fmt(s->recall, 4) << fmt(s->f1, 4) << "\n";
  }
  out << "boundary MAD (ms): VOT onset " << fmt(r.mad.vot_onset, 4)
      << ", VOT offset/vowel onset " << fmt(r.mad.vot_offset_vowel_onset, 4)
      << ", vowel offset " << fmt(r.mad.vowel_offset, 4) << "\n";
  auto line = [&](const char* name, const std::optional<DurationStats>& d) {
    out << "duration " << name << ": ";
    if (d) {
      out << "r " << fmt(d->pearson_r, 4) << " (MAE " << fmt(d->mae_s, 3) << " s, n "
          << d->pairs << ")\n";
    } else {
      out << "undefined\n";
    }
  };
  line("VOT", r.durations.vot);
  line("vowel", r.durations.vowel);
  out << "DDK rate: r " << fmt(r.rate_pearson, 4) << " (MAE " << fmt(r.rate_mae, 3)
      << " syll/s)\n";
}

}  // namespace ddk
