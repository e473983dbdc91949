#include "ddk/segments.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace ddk {

std::string_view label_name(Label label) {
  switch (label) {
    case Label::Vot:
      return "vot";
    case Label::Vowel:
      return "vowel";
    case Label::Other:
      break;
  }
  return "other";
}

std::optional<Label> parse_label(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (lower == "vot") return Label::Vot;
  if (lower == "vowel") return Label::Vowel;
  if (lower == "other") return Label::Other;
  return std::nullopt;
}

bool is_valid(const SegmentSequence& segs) {
  for (std::size_t i = 0; i < segs.size(); ++i) {
    if (segs[i].onset_ms < 0 || segs[i].offset_ms <= segs[i].onset_ms) return false;
    if (i > 0 && segs[i].onset_ms < segs[i - 1].offset_ms) return false;
  }
  return true;
}

Label label_at(const SegmentSequence& segs, double t_ms) {
  auto it = std::upper_bound(
      segs.begin(), segs.end(), t_ms,
      [](double t, const Segment& s) { return t < static_cast<double>(s.offset_ms); });
  if (it != segs.end() && static_cast<double>(it->onset_ms) <= t_ms) return it->label;
  return Label::Other;
}

std::vector<Label> rasterize(const SegmentSequence& segs, std::int64_t frames) {
  std::vector<Label> out(static_cast<std::size_t>(std::max<std::int64_t>(frames, 0)),
                         Label::Other);
  for (const Segment& s : segs) {
    const std::int64_t lo = std::max<std::int64_t>(s.onset_ms, 0);
    const std::int64_t hi = std::min<std::int64_t>(s.offset_ms, frames);
    for (std::int64_t k = lo; k < hi; ++k) out[static_cast<std::size_t>(k)] = s.label;
  }
  return out;
}

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::int64_t parse_int(const std::string& field, const std::string& where) {
  std::size_t used = 0;
  std::int64_t v = 0;
  try {
    v = std::stoll(field, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != field.size()) {
    throw DataError(where + ": expected integer milliseconds, got '" + field + "'");
  }
  return v;
}

}  // namespace

SegmentSequence parse_segments_csv(std::istream& in, const std::string& source) {
  SegmentSequence segs;
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    if (!header_seen) {
      header_seen = true;
      if (line != "onset_ms,offset_ms,label") {
        throw DataError(where + ": expected header 'onset_ms,offset_ms,label'");
      }
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(trim(f));
    if (fields.size() != 3) throw DataError(where + ": expected 3 fields");
    const auto label = parse_label(fields[2]);
    if (!label) throw DataError(where + ": unknown label '" + fields[2] + "'");
    segs.push_back({*label, parse_int(fields[0], where), parse_int(fields[1], where)});
  }
  if (!header_seen) throw DataError(source + ": empty segment file");
  if (!is_valid(segs)) {
    throw DataError(source + ": segments must be ordered, non-overlapping and non-empty");
  }
  return segs;
}

SegmentSequence read_segments_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open segment file '" + path + "'");
  return parse_segments_csv(in, path);
}

void write_segments_csv(std::ostream& out, const SegmentSequence& segs) {
  out << "onset_ms,offset_ms,label\n";
  for (const Segment& s : segs) {
    out << s.onset_ms << ',' << s.offset_ms << ',' << label_name(s.label) << '\n';
  }
}

void write_segments_csv(const std::string& path, const SegmentSequence& segs) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write segment file '" + path + "'");
  write_segments_csv(out, segs);
}

void write_textgrid(std::ostream& out, const SegmentSequence& segs,
                    std::int64_t total_ms, const std::string& tier) {
  struct Interval {
    std::int64_t lo, hi;
    std::string text;
  };
  std::vector<Interval> intervals;
  std::int64_t cursor = 0;
  for (const Segment& s : segs) {
    if (s.onset_ms > cursor) intervals.push_back({cursor, s.onset_ms, ""});
    intervals.push_back({s.onset_ms, s.offset_ms,
                         s.label == Label::Other ? "" : std::string(label_name(s.label))});
    cursor = s.offset_ms;
  }
  const std::int64_t end = std::max(total_ms, cursor);
  if (end > cursor || intervals.empty()) intervals.push_back({cursor, end, ""});

  auto sec = [](std::int64_t ms) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(3) << static_cast<double>(ms) / 1000.0;
    return s.str();
  };
  out << "File type = \"ooTextFile\"\nObject class = \"TextGrid\"\n\n";
  out << "xmin = 0\nxmax = " << sec(end) << "\ntiers? <exists>\nsize = 1\nitem []:\n";
  out << "    item [1]:\n        class = \"IntervalTier\"\n        name = \"" << tier
      << "\"\n        xmin = 0\n        xmax = " << sec(end)
      << "\n        intervals: size = " << intervals.size() << "\n";
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    out << "        intervals [" << i + 1 << "]:\n"
        << "            xmin = " << sec(intervals[i].lo) << "\n"
        << "            xmax = " << sec(intervals[i].hi) << "\n"
        << "            text = \"" << intervals[i].text << "\"\n";
  }
}

SegmentSequence without_other(const SegmentSequence& segs) {
  SegmentSequence out;
  for (const Segment& s : segs) {
    if (s.label != Label::Other) out.push_back(s);
  }
  return out;
}

}  // namespace ddk
