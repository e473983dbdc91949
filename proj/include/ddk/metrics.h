#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ddk/segments.h"

namespace ddk {

// ---------------------------------------------------------------------------
// DDK rate

struct Correction {
  std::size_t segment_index = 0;
  std::string reason;
};

struct SyllableCount {
  std::int64_t raw_count = 0;
  double corrected_count = 0.0;
  std::vector<Correction> corrections;
};

struct RateResult {
  double rate = 0.0;  // syllables per second
  SyllableCount count;
  double articulation_s = 0.0;
};

/// Time window in seconds, [start, end).
using TimeWindow = std::pair<double, double>;

/// Syllables are VOT segments. Each vowel longer than twice the trial's mean
/// vowel duration counts one extra syllable. Articulation time runs from the
/// first VOT onset to the last vowel offset unless `window` is given.
/// Undefined (nullopt) without at least one VOT and one vowel, or when the
/// articulation time is not positive.
std::optional<RateResult> ddk_rate(const SegmentSequence& segs,
                                   std::optional<TimeWindow> window = std::nullopt);

/// VOT-only count: #VOT plus one for every onset-to-onset interval longer than
/// twice the mean interval, divided by the window length. Needs >= 2 VOTs.
std::optional<RateResult> ddk_rate_vot_only(const SegmentSequence& vot_segments,
                                            TimeWindow window);

// ---------------------------------------------------------------------------
// Segment matching

struct MatchedPair {
  std::size_t pred_index = 0;
  std::size_t target_index = 0;
  Segment pred;
  Segment target;
};

struct MatchedPairs {
  std::vector<MatchedPair> pairs;
  std::vector<std::size_t> misses;        // unmatched target indices
  std::vector<std::size_t> false_alarms;  // unmatched prediction indices
  SegmentSequence pred;
  SegmentSequence target;
};

std::int64_t overlap_ms(const Segment& a, const Segment& b);

/// Greedy one-to-one assignment in prediction order. Each VOT/vowel
/// prediction takes the still-unmatched target of its label minimizing
/// |d onset| + |d offset| (ties: larger overlap, then earlier target); the
/// pair is kept only if the two overlap. Other segments do not take part.
MatchedPairs match_segments(const SegmentSequence& pred, const SegmentSequence& target);

/// Merges per-trial matchings into one pool (indices become pool-relative).
void append_matches(MatchedPairs& pool, const MatchedPairs& trial);

struct LabelScores {
  std::int64_t matched = 0;
  std::int64_t false_alarms = 0;
  std::int64_t misses = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool degenerate = false;  // no predictions and no targets of this label
};

struct F1Scores {
  LabelScores vot;
  LabelScores vowel;
};

F1Scores f1_scores(const MatchedPairs& m);

// ---------------------------------------------------------------------------
// Durations and boundaries

/// Linear-interpolation percentile (p in [0, 100]) of an unsorted list.
double percentile(std::vector<double> values, double p);

/// Indices of values within [P2, P95] (drops the top 5 % and bottom 2 %).
std::vector<std::size_t> trim_outliers(const std::vector<double>& durations);

struct DurationStats {
  double pearson_r = 0.0;
  double mae_s = 0.0;
  std::size_t pairs = 0;
};

std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y);

/// Per-label duration agreement over matched pairs after independent outlier
/// trimming of the predicted and target duration lists. Undefined with fewer
/// than three surviving pairs or zero variance.
struct DurationReport {
  std::optional<DurationStats> vot;
  std::optional<DurationStats> vowel;
};
DurationReport duration_stats(const MatchedPairs& m);

struct BoundaryMad {
  std::optional<double> vot_onset;
  std::optional<double> vot_offset_vowel_onset;  // pools both boundary types
  std::optional<double> vowel_offset;
};

/// Mean absolute boundary deviation in ms per boundary class.
BoundaryMad boundary_mad(const MatchedPairs& m);

// ---------------------------------------------------------------------------
// Report

struct TrialInput {
  std::string name;
  SegmentSequence pred;
  SegmentSequence target;
  std::optional<TimeWindow> window;
};

struct TrialRates {
  std::string name;
  std::optional<double> pred_rate;
  std::optional<double> target_rate;
};

struct EvalReport {
  F1Scores f1;
  BoundaryMad mad;
  DurationReport durations;
  std::vector<TrialRates> rates;
  std::optional<double> rate_pearson;
  std::optional<double> rate_mae;
  std::size_t trials = 0;
};

EvalReport evaluate(const std::vector<TrialInput>& trials);

/// key,value rows; undefined entries are written as NA.
void write_report_csv(std::ostream& out, const EvalReport& r);
void print_report(std::ostream& out, const EvalReport& r);

}  // namespace ddk
