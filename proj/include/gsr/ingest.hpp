#pragma once

// Recording CSV input/output and segmentation of labeled recordings into windows.
//
// CSV schema: header `t,gsr` or `t,gsr,label`; t in seconds, gsr in microsiemens,
// label an integer in {-1, 0, 1} or empty (= -1). Lines starting with '#' are
// comments. The sampling rate is inferred as 1 / median(dt); every dt must lie
// within 1% of that median.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "gsr/signal.hpp"

namespace gsr {

/// Shortest text form that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace text {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '\n'))
    s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(s.substr(start)));
      return out;
    }
    out.push_back(trim(s.substr(start, pos - start)));
    start = pos + 1;
  }
}

inline std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v))
    return std::nullopt;
  return v;
}

inline std::optional<long long> parse_int(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  long long v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace text

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

/// Parse a recording from a stream; `source` is used in diagnostics.
inline Recording parse_recording_csv(std::istream& in, const std::string& source, std::string id = {}) {
  Recording rec;
  rec.id = std::move(id);
  std::vector<double> times;
  std::vector<std::size_t> row_lines;
  bool header_seen = false;
  bool has_label = false;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) {
    throw DataError(source + ":" + std::to_string(line_no) + ": " + what);
  };

  while (std::getline(in, line)) {
    ++line_no;
    std::string_view sv = text::trim(line);
    if (line_no == 1 && sv.size() >= 3 && sv.substr(0, 3) == "\xEF\xBB\xBF") sv.remove_prefix(3);
    if (sv.empty() || sv.front() == '#') continue;
    auto fields = text::split(sv, ',');
    if (!header_seen) {
      if (fields.size() == 2 && fields[0] == "t" && fields[1] == "gsr") {
        has_label = false;
      } else if (fields.size() == 3 && fields[0] == "t" && fields[1] == "gsr" && fields[2] == "label") {
        has_label = true;
      } else {
        fail("expected header `t,gsr,label` or `t,gsr`");
      }
      header_seen = true;
      continue;
    }
    if (fields.size() != (has_label ? 3u : 2u)) fail("wrong number of fields");
    auto t = text::parse_double(fields[0]);
    if (!t) fail("malformed row: non-numeric time `" + std::string(fields[0]) + "`");
    auto g = text::parse_double(fields[1]);
    if (!g) fail("malformed row: non-numeric gsr `" + std::string(fields[1]) + "`");
    if (!times.empty() && !(*t > times.back())) fail("non-monotone timestamps");
    if (has_label) {
      int label = kUnlabeled;
      if (!fields[2].empty()) {
        auto l = text::parse_int(fields[2]);
        if (!l || *l < -1 || *l > 1) fail("malformed row: label must be -1, 0, 1 or empty");
        label = static_cast<int>(*l);
      }
      rec.labels.push_back(label);
    }
    times.push_back(*t);
    row_lines.push_back(line_no);
    rec.trace.samples.push_back(*g);
  }
  if (!header_seen) throw DataError(source + ": empty recording (no header)");
  if (times.empty()) throw DataError(source + ": empty recording");
  if (times.size() < 2) throw DataError(source + ": need at least two rows to infer the sampling rate");

  std::vector<double> dts(times.size() - 1);
  for (std::size_t i = 1; i < times.size(); ++i) dts[i - 1] = times[i] - times[i - 1];
  const double dt = median(dts);
  for (std::size_t i = 0; i < dts.size(); ++i) {
    if (std::abs(dts[i] - dt) > 0.01 * dt) {
      line_no = row_lines[i + 1];
      fail("timestamp jitter above 1% of the median interval");
    }
  }
  rec.trace.fs = 1.0 / dt;
  return rec;
}

inline Recording parse_recording_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open recording " + path.string());
  return parse_recording_csv(in, path.string(), path.stem().string());
}

inline void write_recording_csv(std::ostream& out, const Recording& rec) {
  const bool labeled = rec.has_labels();
  out << (labeled ? "t,gsr,label\n" : "t,gsr\n");
  for (std::size_t i = 0; i < rec.trace.size(); ++i) {
    out << format_double(rec.trace.time_at(i)) << ',' << format_double(rec.trace.samples[i]);
    if (labeled) {
      out << ',';
      if (rec.labels[i] != kUnlabeled) out << rec.labels[i];
    }
    out << '\n';
  }
}

inline void write_recording_csv(const std::filesystem::path& path, const Recording& rec) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  write_recording_csv(out, rec);
}

/// A fixed-length, single-label slice of a recording. [begin, end) indexes samples.
struct LabeledWindow {
  std::string recording_id;
  double start_s = 0.0;
  double end_s = 0.0;
  std::size_t begin = 0;
  std::size_t end = 0;
  int label = kNotStressed;

  std::size_t length() const noexcept { return end - begin; }
};

/// Windows start every stride_s seconds; only windows fully inside the recording
/// whose labels are all 0 or all 1 are kept.
inline std::vector<LabeledWindow> segment_windows(const Recording& rec, double window_s, double stride_s) {
  if (!rec.has_labels()) throw DataError("windows require labels (recording `" + rec.id + "` has none)");
  if (!(stride_s > 0.0) || !(window_s >= stride_s))
    throw ConfigError("segment_windows: need window_s >= stride_s > 0");
  const double fs = rec.trace.fs;
  const std::size_t n = rec.trace.size();
  const auto length = static_cast<std::size_t>(std::llround(window_s * fs));
  std::vector<LabeledWindow> out;
  if (length == 0) return out;
  for (std::size_t k = 0;; ++k) {
    const double start_s = static_cast<double>(k) * stride_s;
    const auto begin = static_cast<std::size_t>(std::llround(start_s * fs));
    if (begin + length > n) break;
    const int first = rec.labels[begin];
    if (first != kNotStressed && first != kStressed) continue;
    const bool pure = std::all_of(rec.labels.begin() + static_cast<std::ptrdiff_t>(begin),
                                  rec.labels.begin() + static_cast<std::ptrdiff_t>(begin + length),
                                  [first](int l) { return l == first; });
    if (!pure) continue;
    out.push_back({rec.id, start_s, start_s + window_s, begin, begin + length, first});
  }
  return out;
}

}  // namespace gsr
