#pragma once

#include <cstdint>
#include <vector>

#include "ddk/segments.h"

namespace ddk {

/// Minimum durations below which a segment is relabeled Other.
inline constexpr std::int64_t kMinVotMs = 5;
inline constexpr std::int64_t kMinVowelMs = 20;
/// Other runs shorter than this between two VOTs are absorbed into one VOT.
inline constexpr std::int64_t kMaxVotGapMs = 20;

/// Maximal runs of equal labels, frame k covering [k, k+1) ms.
SegmentSequence group_frames(const std::vector<Label>& frames);

/// Merges touching segments that share a label.
SegmentSequence merge_adjacent(const SegmentSequence& segs);

/// VOT < 5 ms and vowel < 20 ms become Other; neighbours are re-merged.
SegmentSequence apply_min_durations(const SegmentSequence& segs);

/// Collapses (VOT, Other < 20 ms, VOT) into one VOT, to a fixpoint.
SegmentSequence merge_vot_gaps(const SegmentSequence& segs);

/// group_frames -> apply_min_durations -> merge_vot_gaps.
SegmentSequence postprocess(const std::vector<Label>& frames);

}  // namespace ddk
