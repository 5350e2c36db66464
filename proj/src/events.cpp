#include "evdet/events.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>

#include "evdet/error.hpp"
#include "evdet/io_util.hpp"

namespace evdet {
namespace {

constexpr std::string_view kEvsMagic = "EVS1";
constexpr std::size_t kEvsHeader = 8;
constexpr std::size_t kEvsRecord = 16;

template <typename T>
bool parse_int(std::string_view field, T& out) {
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
  return ec == std::errc{} && ptr == field.data() + field.size();
}

std::string_view trim_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

void check_bounds(const Event& e, const SensorGeometry& g, std::uint64_t offset, const char* unit) {
  if (!g.contains(e.x, e.y)) {
    throw ParseError("out-of-bounds coordinate (" + std::to_string(e.x) + "," + std::to_string(e.y) +
                         ") at " + unit + " " + std::to_string(offset),
                     offset);
  }
}

void finish(EventStream& s, const ParseOptions& opts, const std::vector<std::uint64_t>& offsets,
            const char* unit) {
  if (opts.sort) {
    std::stable_sort(s.events.begin(), s.events.end(),
                     [](const Event& a, const Event& b) { return a.t < b.t; });
  } else {
    for (std::size_t i = 1; i < s.events.size(); ++i) {
      if (s.events[i].t < s.events[i - 1].t) {
        throw ParseError("non-monotone timestamp at " + std::string(unit) + " " +
                             std::to_string(offsets[i]),
                         offsets[i]);
      }
    }
  }
  if (opts.rebase_epoch && !s.events.empty()) {
    const std::uint64_t t0 =
        std::min_element(s.events.begin(), s.events.end(),
                         [](const Event& a, const Event& b) { return a.t < b.t; })
            ->t;
    for (auto& e : s.events) e.t -= t0;
  }
}

EventStream parse_evs(std::string_view src, const ParseOptions& opts) {
  if (src.size() < kEvsHeader || src.substr(0, 4) != kEvsMagic) {
    throw ParseError("missing EVS1 header", 0);
  }
  const auto* base = reinterpret_cast<const unsigned char*>(src.data());
  EventStream s;
  s.geometry = {io::get_u16(base + 4), io::get_u16(base + 6)};
  if (s.geometry.width == 0 || s.geometry.height == 0) throw ParseError("zero sensor dimension in header", 4);

  const std::size_t body = src.size() - kEvsHeader;
  if (body % kEvsRecord != 0) {
    const std::uint64_t off = kEvsHeader + body / kEvsRecord * kEvsRecord;
    throw ParseError("truncated record at byte " + std::to_string(off), off);
  }
  const std::size_t n = body / kEvsRecord;
  s.events.reserve(n);
  std::vector<std::uint64_t> offsets;
  offsets.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t off = kEvsHeader + i * kEvsRecord;
    const unsigned char* r = base + off;
    Event e;
    e.t = io::get_u64(r);
    e.x = io::get_u16(r + 8);
    e.y = io::get_u16(r + 10);
    e.p = static_cast<std::int8_t>(r[12]);
    if (e.p != 1 && e.p != -1) {
      throw ParseError("invalid polarity " + std::to_string(e.p) + " at byte " + std::to_string(off + 12),
                       off + 12);
    }
    if (r[13] != 0 || r[14] != 0 || r[15] != 0) {
      throw ParseError("nonzero reserved bytes at byte " + std::to_string(off + 13), off + 13);
    }
    check_bounds(e, s.geometry, off, "byte");
    s.events.push_back(e);
    offsets.push_back(off);
  }
  finish(s, opts, offsets, "byte");
  return s;
}

EventStream parse_csv(std::string_view src, const ParseOptions& opts) {
  validate_geometry(opts.geometry);
  EventStream s;
  s.geometry = opts.geometry;
  std::vector<std::uint64_t> records;

  std::size_t pos = 0;
  std::uint64_t line_no = 0;
  bool header_seen = false;
  while (pos < src.size()) {
    std::size_t eol = src.find('\n', pos);
    if (eol == std::string_view::npos) eol = src.size();
    std::string_view line = trim_cr(src.substr(pos, eol - pos));
    pos = eol + 1;
    ++line_no;
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != "t,x,y,p") throw ParseError("expected CSV header 't,x,y,p' at line 1", line_no);
      header_seen = true;
      continue;
    }
    const std::uint64_t record = records.size() + 1;
    std::string_view f[4];
    int nf = 0;
    for (std::size_t start = 0; nf < 5; ++nf) {
      const std::size_t comma = line.find(',', start);
      if (nf < 4) f[nf] = line.substr(start, comma - start);
      if (comma == std::string_view::npos) { ++nf; break; }
      start = comma + 1;
    }
    std::uint64_t t = 0;
    std::uint32_t x = 0, y = 0;
    int p = 0;
    if (nf != 4 || !parse_int(f[0], t) || !parse_int(f[1], x) || !parse_int(f[2], y) ||
        !parse_int(f[3], p) || x > 0xffff || y > 0xffff) {
      throw ParseError("malformed record " + std::to_string(record) + " at line " + std::to_string(line_no),
                       line_no);
    }
    if (p != 1 && p != -1) {
      throw ParseError("invalid polarity at record " + std::to_string(record), line_no);
    }
    Event e{t, static_cast<std::uint16_t>(x), static_cast<std::uint16_t>(y), static_cast<std::int8_t>(p)};
    check_bounds(e, s.geometry, record, "record");
    s.events.push_back(e);
    records.push_back(record);
  }
  if (!header_seen) throw ParseError("missing CSV header", 0);
  finish(s, opts, records, "record");
  return s;
}

}  // namespace

void validate_geometry(const SensorGeometry& g) {
  if (g.width < 1 || g.height < 1) throw Error("sensor geometry must be at least 1x1");
  if (g.width > 0xffff || g.height > 0xffff) throw Error("sensor geometry exceeds 65535 pixels per side");
}

SensorGeometry parse_geometry(std::string_view text) {
  const auto sep = text.find('x');
  SensorGeometry g{0, 0};
  if (sep == std::string_view::npos || !parse_int(text.substr(0, sep), g.width) ||
      !parse_int(text.substr(sep + 1), g.height)) {
    throw Error("geometry must look like WxH, got '" + std::string(text) + "'");
  }
  validate_geometry(g);
  return g;
}

StreamFormat detect_format(std::string_view source) {
  return source.substr(0, 4) == kEvsMagic ? StreamFormat::binary_evs : StreamFormat::csv;
}

EventStream parse_stream(std::string_view source, StreamFormat format, const ParseOptions& opts) {
  return format == StreamFormat::binary_evs ? parse_evs(source, opts) : parse_csv(source, opts);
}

std::string write_stream(const EventStream& stream, StreamFormat format) {
  validate_geometry(stream.geometry);
  std::string out;
  if (format == StreamFormat::binary_evs) {
    out.reserve(kEvsHeader + stream.events.size() * kEvsRecord);
    out.append(kEvsMagic);
    io::put_u16(out, static_cast<std::uint16_t>(stream.geometry.width));
    io::put_u16(out, static_cast<std::uint16_t>(stream.geometry.height));
    for (const auto& e : stream.events) {
      io::put_u64(out, e.t);
      io::put_u16(out, e.x);
      io::put_u16(out, e.y);
      out.push_back(static_cast<char>(e.p));
      out.append(3, '\0');
    }
    return out;
  }
  out = "t,x,y,p\n";
  for (const auto& e : stream.events) {
    out += std::to_string(e.t);
    out += ',';
    out += std::to_string(e.x);
    out += ',';
    out += std::to_string(e.y);
    out += ',';
    out += std::to_string(static_cast<int>(e.p));
    out += '\n';
  }
  return out;
}

void validate_stream(const EventStream& stream) {
  validate_geometry(stream.geometry);
  for (std::size_t i = 0; i < stream.events.size(); ++i) {
    const Event& e = stream.events[i];
    if (e.p != 1 && e.p != -1) throw Error("invalid polarity at event " + std::to_string(i));
    if (!stream.geometry.contains(e.x, e.y)) throw Error("out-of-bounds event " + std::to_string(i));
    if (i > 0 && e.t < stream.events[i - 1].t) throw Error("non-monotone timestamp at event " + std::to_string(i));
  }
}

std::vector<EventWindow> slice_windows(const EventStream& stream, std::uint64_t duration_us,
                                       std::uint64_t stride_us, std::optional<std::uint64_t> span_us) {
  if (duration_us < 1 || stride_us < 1) throw Error("window duration and stride must be >= 1 us");
  std::vector<EventWindow> windows;
  const auto& ev = stream.events;

  auto more = [&](std::uint64_t start) {
    if (span_us) return start < *span_us;
    return !ev.empty() && start <= ev.back().t;
  };
  auto by_time = [](const Event& e, std::uint64_t t) { return e.t < t; };

  for (std::uint64_t start = 0; more(start); start += stride_us) {
    EventWindow w;
    w.start_us = start;
    w.duration_us = duration_us;
    w.geometry = stream.geometry;
    auto lo = std::lower_bound(ev.begin(), ev.end(), start, by_time);
    auto hi = std::lower_bound(lo, ev.end(), start + duration_us, by_time);
    w.events.assign(lo, hi);
    windows.push_back(std::move(w));
  }
  return windows;
}

}  // namespace evdet
