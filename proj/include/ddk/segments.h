#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ddk {

/// Frame and segment classes. Numeric order is the argmax tie-break order.
enum class Label : std::uint8_t { Other = 0, Vot = 1, Vowel = 2 };

inline constexpr int kNumClasses = 3;

std::string_view label_name(Label label);
std::optional<Label> parse_label(std::string_view text);

/// Half-open interval [onset_ms, offset_ms).
struct Segment {
  Label label = Label::Other;
  std::int64_t onset_ms = 0;
  std::int64_t offset_ms = 0;

  std::int64_t duration_ms() const { return offset_ms - onset_ms; }
  bool operator==(const Segment&) const = default;
};

using SegmentSequence = std::vector<Segment>;

/// One label per millisecond, with optional (frames, 3) class posteriors.
struct FrameLabelSequence {
  std::vector<Label> labels;
  std::vector<float> probs;
  bool padded = false;  // input was shorter than the receptive field

  std::size_t size() const { return labels.size(); }
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Ordered, non-overlapping, positive-duration segments.
bool is_valid(const SegmentSequence& segs);

/// Drops Other segments, leaving the VOT and vowel rows.
SegmentSequence without_other(const SegmentSequence& segs);

/// Label of the segment covering time `t_ms`, Other when uncovered.
Label label_at(const SegmentSequence& segs, double t_ms);

/// Frame k takes the label covering its midpoint k + 0.5 ms.
std::vector<Label> rasterize(const SegmentSequence& segs, std::int64_t frames);

/// Reads a segment CSV (header `onset_ms,offset_ms,label`). Throws DataError
/// on malformed rows or labels outside {vot, vowel, other}.
SegmentSequence read_segments_csv(const std::string& path);
SegmentSequence parse_segments_csv(std::istream& in, const std::string& source);
void write_segments_csv(const std::string& path, const SegmentSequence& segs);
void write_segments_csv(std::ostream& out, const SegmentSequence& segs);

/// Praat long-format TextGrid with one interval tier. Gaps are filled with
/// empty intervals as Praat requires contiguous tiers.
void write_textgrid(std::ostream& out, const SegmentSequence& segs,
                    std::int64_t total_ms, const std::string& tier = "ddk");

}  // namespace ddk
