#include "ddk/postproc.h"

namespace ddk {

SegmentSequence group_frames(const std::vector<Label>& frames) {
  SegmentSequence out;
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const auto t = static_cast<std::int64_t>(k);
    if (!out.empty() && out.back().label == frames[k] && out.back().offset_ms == t) {
      out.back().offset_ms = t + 1;
    } else {
      out.push_back({frames[k], t, t + 1});
    }
  }
  return out;
}

SegmentSequence merge_adjacent(const SegmentSequence& segs) {
  SegmentSequence out;
  for (const Segment& s : segs) {
    if (!out.empty() && out.back().label == s.label && out.back().offset_ms == s.onset_ms) {
      out.back().offset_ms = s.offset_ms;
    } else {
      out.push_back(s);
    }
  }
  return out;
}

SegmentSequence apply_min_durations(const SegmentSequence& segs) {
  SegmentSequence relabeled = segs;
  for (Segment& s : relabeled) {
    if ((s.label == Label::Vot && s.duration_ms() < kMinVotMs) ||
        (s.label == Label::Vowel && s.duration_ms() < kMinVowelMs)) {
      s.label = Label::Other;
    }
  }
  return merge_adjacent(relabeled);
}

SegmentSequence merge_vot_gaps(const SegmentSequence& segs) {
  // A single left-to-right sweep reaches the fixpoint: after a merge the
  // growing VOT stays on the output stack and can absorb the next gap.
  SegmentSequence out;
  for (const Segment& s : segs) {
    const std::size_t n = out.size();
    if (s.label == Label::Vot && n >= 2 && out[n - 1].label == Label::Other &&
        out[n - 2].label == Label::Vot && out[n - 1].duration_ms() < kMaxVotGapMs &&
        out[n - 2].offset_ms == out[n - 1].onset_ms && out[n - 1].offset_ms == s.onset_ms) {
      out.pop_back();
      out.back().offset_ms = s.offset_ms;
    } else {
      out.push_back(s);
    }
  }
  return merge_adjacent(out);
}

SegmentSequence postprocess(const std::vector<Label>& frames) {
  return merge_vot_gaps(apply_min_durations(group_frames(frames)));
}

}  // namespace ddk
