#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "evtcrypt/errors.hpp"
#include "evtcrypt/event.hpp"
#include "evtcrypt/splitmix64.hpp"

// Serialization. Three file kinds, all deterministic (the same stream always
// produces identical bytes):
//
//   text events    "# evt v1 <width> <height>" header, then one record per
//                  line: "<t> <x> <y> <p>" with p in {-1, 1}.
//   binary events  little-endian: magic "EVT1", u16 width, u16 height,
//                  u64 count, then count records of
//                  (u64 t, u16 x, u16 y, i8 p, u8 pad).
//   key file       little-endian: magic "EVK1", u8 cipher id, u64 nonce,
//                  u64 count, count u64 words, u32 crc32 over every
//                  preceding byte. The words are the ascending szudzik codes
//                  of the key plane xored with a splitmix64 keystream seeded
//                  with (secret ^ nonce). Cipher id 1 names that keystream
//                  cipher; other ids are reserved for stronger replacements.
//
// Writers emit events in canonical order. Readers accept out-of-order
// records, re-sort, and report it through the optional `resorted` flag.

namespace evtcrypt {

enum class StreamFormat { text, binary };

constexpr uint8_t kKeyCipherSplitmix64 = 1;

namespace detail {

inline void put_u16(std::string& out, uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

inline void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void put_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline uint16_t get_u16(std::string_view in, size_t off) {
  return static_cast<uint16_t>(static_cast<uint8_t>(in[off]) |
                               (static_cast<uint8_t>(in[off + 1]) << 8));
}

inline uint32_t get_u32(std::string_view in, size_t off) {
  uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<uint8_t>(in[off + i]);
  return v;
}

inline uint64_t get_u64(std::string_view in, size_t off) {
  uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<uint8_t>(in[off + i]);
  return v;
}

inline uint32_t crc32(std::string_view bytes) {
  static const std::array<uint32_t, 256> table = [] {
    std::array<uint32_t, 256> t{};
    for (uint32_t i = 0; i < 256; ++i) {
      uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  uint32_t c = 0xFFFFFFFFu;
  for (unsigned char b : bytes) c = table[(c ^ b) & 0xFFu] ^ (c >> 8);
  return c ^ 0xFFFFFFFFu;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  return bytes;
}

inline void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw data_error("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw data_error("short write to " + path.string());
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (i == line.size()) break;
    size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

// Whole-token integer parses; partial matches ("12x") are rejected.
template <typename Int>
inline bool parse_int(std::string_view tok, Int& v) {
  const char* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), last, v);
  return ec == std::errc() && ptr == last;
}

// True if the events were not already in canonical order.
inline bool finalize_read(EventStream& s) {
  const bool sorted = std::is_sorted(s.events.begin(), s.events.end(), canonical_less);
  if (!sorted) std::sort(s.events.begin(), s.events.end(), canonical_less);
  return !sorted;
}

}  // namespace detail

// --- text event format -----------------------------------------------------

inline std::string write_text_string(const EventStream& s) {
  const EventStream c = canonical_sort(s);
  std::string out = "# evt v1 " + std::to_string(c.width) + " " +
                    std::to_string(c.height) + "\n";
  for (const Event& e : c.events) {
    out += std::to_string(e.t);
    out += ' ';
    out += std::to_string(e.px.x);
    out += ' ';
    out += std::to_string(e.px.y);
    out += ' ';
    out += e.p > 0 ? "1" : "-1";
    out += '\n';
  }
  return out;
}

inline EventStream read_text_string(std::string_view bytes, bool* resorted = nullptr) {
  EventStream s;
  bool have_header = false;
  size_t pos = 0;
  size_t lineno = 0;
  while (pos <= bytes.size()) {
    const size_t eol = bytes.find('\n', pos);
    std::string_view line = bytes.substr(pos, eol == std::string_view::npos
                                                  ? bytes.size() - pos
                                                  : eol - pos);
    pos = eol == std::string_view::npos ? bytes.size() + 1 : eol + 1;
    ++lineno;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
    while (!line.empty() && line.front() == ' ') line.remove_prefix(1);
    if (line.empty()) continue;

    const std::string where = "line " + std::to_string(lineno);
    const std::vector<std::string_view> f = detail::split_fields(line);
    if (!have_header) {
      long long w = -1, h = -1;
      if (f.size() != 5 || f[0] != "#" || f[1] != "evt" || f[2] != "v1" ||
          !detail::parse_int(f[3], w) || !detail::parse_int(f[4], h))
        throw data_error("malformed header at " + where +
                         " (expected '# evt v1 <width> <height>')");
      if (w < 1 || w > 65535 || h < 1 || h > 65535)
        throw data_error("resolution out of range at " + where);
      s.width = static_cast<uint16_t>(w);
      s.height = static_cast<uint16_t>(h);
      have_header = true;
      continue;
    }

    unsigned long long t = 0;
    long long x = 0, y = 0, p = 0;
    if (f.size() == 4 && f[0].starts_with('-'))
      throw data_error("negative timestamp at " + where);
    if (f.size() != 4 || !detail::parse_int(f[0], t) || !detail::parse_int(f[1], x) ||
        !detail::parse_int(f[2], y) || !detail::parse_int(f[3], p))
      throw data_error("malformed event record at " + where);
    if (x < 0 || x >= s.width || y < 0 || y >= s.height)
      throw data_error("pixel out of bounds at " + where);
    if (p != 1 && p != -1) throw data_error("invalid polarity at " + where);
    s.events.push_back(Event{static_cast<uint64_t>(t),
                             Pixel{static_cast<uint16_t>(x), static_cast<uint16_t>(y)},
                             static_cast<int8_t>(p)});
  }
  if (!have_header) throw data_error("missing '# evt v1' header");
  const bool r = detail::finalize_read(s);
  if (resorted) *resorted = r;
  return s;
}

inline void write_text(const EventStream& s, const std::filesystem::path& path) {
  detail::write_file(path, write_text_string(s));
}

inline EventStream read_text(const std::filesystem::path& path, bool* resorted = nullptr) {
  return read_text_string(detail::read_file(path), resorted);
}

// --- binary event format ----------------------------------------------------

constexpr std::string_view kBinaryMagic = "EVT1";
constexpr size_t kBinaryHeaderSize = 16;
constexpr size_t kBinaryRecordSize = 14;

inline std::string write_binary_string(const EventStream& s) {
  const EventStream c = canonical_sort(s);
  std::string out;
  out.reserve(kBinaryHeaderSize + c.events.size() * kBinaryRecordSize);
  out += kBinaryMagic;
  detail::put_u16(out, c.width);
  detail::put_u16(out, c.height);
  detail::put_u64(out, c.events.size());
  for (const Event& e : c.events) {
    detail::put_u64(out, e.t);
    detail::put_u16(out, e.px.x);
    detail::put_u16(out, e.px.y);
    out.push_back(static_cast<char>(e.p));
    out.push_back('\0');
  }
  return out;
}

inline EventStream read_binary_string(std::string_view bytes, bool* resorted = nullptr) {
  if (bytes.size() < kBinaryHeaderSize || bytes.substr(0, 4) != kBinaryMagic)
    throw data_error("bad event file magic (expected EVT1)");
  EventStream s;
  s.width = detail::get_u16(bytes, 4);
  s.height = detail::get_u16(bytes, 6);
  if (s.width == 0 || s.height == 0) throw data_error("zero resolution in event file");
  const uint64_t count = detail::get_u64(bytes, 8);
  const uint64_t payload = bytes.size() - kBinaryHeaderSize;
  if (payload < count * kBinaryRecordSize) throw data_error("truncated event file");
  if (payload > count * kBinaryRecordSize)
    throw data_error("event count mismatch (trailing bytes)");
  s.events.reserve(count);
  size_t off = kBinaryHeaderSize;
  for (uint64_t i = 0; i < count; ++i, off += kBinaryRecordSize) {
    Event e;
    e.t = detail::get_u64(bytes, off);
    e.px.x = detail::get_u16(bytes, off + 8);
    e.px.y = detail::get_u16(bytes, off + 10);
    e.p = static_cast<int8_t>(bytes[off + 12]);
    if (e.px.x >= s.width || e.px.y >= s.height)
      throw data_error("pixel out of bounds in record " + std::to_string(i));
    if (e.p != 1 && e.p != -1)
      throw data_error("invalid polarity in record " + std::to_string(i));
    s.events.push_back(e);
  }
  const bool r = detail::finalize_read(s);
  if (resorted) *resorted = r;
  return s;
}

inline void write_binary(const EventStream& s, const std::filesystem::path& path) {
  detail::write_file(path, write_binary_string(s));
}

inline EventStream read_binary(const std::filesystem::path& path, bool* resorted = nullptr) {
  return read_binary_string(detail::read_file(path), resorted);
}

// --- format-agnostic helpers -------------------------------------------------

inline std::string write_stream_string(const EventStream& s, StreamFormat f) {
  return f == StreamFormat::binary ? write_binary_string(s) : write_text_string(s);
}

inline void write_stream(const EventStream& s, const std::filesystem::path& path,
                         StreamFormat f) {
  detail::write_file(path, write_stream_string(s, f));
}

// Sniffs the magic; anything that is not an EVT1 file is parsed as text.
inline EventStream read_stream_string(std::string_view bytes, bool* resorted = nullptr) {
  if (bytes.size() >= 4 && bytes.substr(0, 4) == kBinaryMagic)
    return read_binary_string(bytes, resorted);
  return read_text_string(bytes, resorted);
}

inline EventStream read_stream(const std::filesystem::path& path, bool* resorted = nullptr) {
  return read_stream_string(detail::read_file(path), resorted);
}

// --- label sidecar ------------------------------------------------------------

inline std::string write_labels_string(std::span<const uint8_t> labels) {
  std::string out;
  out.reserve(labels.size() * 2);
  for (uint8_t b : labels) {
    out.push_back(b ? '1' : '0');
    out.push_back('\n');
  }
  return out;
}

inline std::vector<uint8_t> read_labels_string(std::string_view bytes) {
  std::vector<uint8_t> labels;
  size_t pos = 0;
  size_t lineno = 0;
  while (pos <= bytes.size()) {
    const size_t eol = bytes.find('\n', pos);
    std::string_view line = bytes.substr(pos, eol == std::string_view::npos
                                                  ? bytes.size() - pos
                                                  : eol - pos);
    pos = eol == std::string_view::npos ? bytes.size() + 1 : eol + 1;
    ++lineno;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
    if (line.empty()) continue;
    if (line == "0")
      labels.push_back(0);
    else if (line == "1")
      labels.push_back(1);
    else
      throw data_error("invalid label at line " + std::to_string(lineno));
  }
  return labels;
}

inline void write_labels(std::span<const uint8_t> labels, const std::filesystem::path& path) {
  detail::write_file(path, write_labels_string(labels));
}

inline std::vector<uint8_t> read_labels(const std::filesystem::path& path) {
  return read_labels_string(detail::read_file(path));
}

// --- key file -----------------------------------------------------------------

constexpr std::string_view kKeyMagic = "EVK1";
constexpr size_t kKeyHeaderSize = 21;  // magic + cipher id + nonce + count

inline std::string write_key_string(const SpatialPlane& plane, uint64_t secret,
                                    uint64_t nonce) {
  if (plane.empty()) throw data_error("cannot write an empty key");
  std::string out;
  out.reserve(kKeyHeaderSize + plane.size() * 8 + 4);
  out += kKeyMagic;
  out.push_back(static_cast<char>(kKeyCipherSplitmix64));
  detail::put_u64(out, nonce);
  detail::put_u64(out, plane.size());
  Splitmix64 keystream(secret ^ nonce);
  for (uint32_t code : plane.codes()) detail::put_u64(out, code ^ keystream());
  detail::put_u32(out, detail::crc32(out));
  return out;
}

inline SpatialPlane read_key_string(std::string_view bytes, uint64_t secret) {
  if (bytes.size() < kKeyHeaderSize + 4 || bytes.substr(0, 4) != kKeyMagic)
    throw key_error("not a key file (bad magic)");
  const uint8_t cipher = static_cast<uint8_t>(bytes[4]);
  if (cipher != kKeyCipherSplitmix64)
    throw key_error("unsupported key cipher id " + std::to_string(cipher));
  const uint64_t nonce = detail::get_u64(bytes, 5);
  const uint64_t count = detail::get_u64(bytes, 13);
  if (count == 0) throw key_error("empty key");
  if (bytes.size() != kKeyHeaderSize + count * 8 + 4)
    throw key_error("corrupt key file (size mismatch)");
  const uint32_t stored = detail::get_u32(bytes, bytes.size() - 4);
  if (stored != detail::crc32(bytes.substr(0, bytes.size() - 4)))
    throw key_error("corrupt key file (checksum)");

  // Decode and validate. Codes must be strictly increasing and within the
  // 16-bit pairing range; a wrong secret yields pseudo-random words that
  // fail this with overwhelming probability.
  Splitmix64 keystream(secret ^ nonce);
  std::vector<uint32_t> codes;
  codes.reserve(count);
  uint64_t prev = 0;
  for (uint64_t i = 0; i < count; ++i) {
    const uint64_t code = detail::get_u64(bytes, kKeyHeaderSize + i * 8) ^ keystream();
    if (code > 0xFFFFFFFFull || (i > 0 && code <= prev))
      throw key_error("wrong secret or corrupted key");
    prev = code;
    codes.push_back(static_cast<uint32_t>(code));
  }
  return SpatialPlane::from_codes(std::move(codes));
}

inline void write_key(const SpatialPlane& plane, uint64_t secret, uint64_t nonce,
                      const std::filesystem::path& path) {
  detail::write_file(path, write_key_string(plane, secret, nonce));
}

inline SpatialPlane read_key(const std::filesystem::path& path, uint64_t secret) {
  return read_key_string(detail::read_file(path), secret);
}

}  // namespace evtcrypt
