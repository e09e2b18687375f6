#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "evtcrypt/errors.hpp"

namespace evtcrypt {

// Sensor pixel, 0-based: x is the column, y the row. Sensors wider or taller
// than 65535 pixels are out of scope.
struct Pixel {
  uint16_t x = 0;
  uint16_t y = 0;

  friend bool operator==(const Pixel&, const Pixel&) = default;
};

// One brightness-change sample: where, which sign, when (integer
// microseconds).
struct Event {
  uint64_t t = 0;
  Pixel px;
  int8_t p = 1;  // -1 or +1

  friend bool operator==(const Event&, const Event&) = default;
};

// A batch of events together with the sensor resolution that bounds them.
struct EventStream {
  uint16_t width = 0;
  uint16_t height = 0;
  std::vector<Event> events;

  friend bool operator==(const EventStream&, const EventStream&) = default;
};

// Event stream plus per-event ground truth: 1 = true signal, 0 = noise.
// Labels stay aligned with the events through canonical sorting.
struct LabeledStream {
  EventStream stream;
  std::vector<uint8_t> labels;
};

inline uint8_t pol_bit(int8_t p) { return p > 0 ? uint8_t{1} : uint8_t{0}; }
inline int8_t bit_pol(uint8_t b) { return b ? int8_t{1} : int8_t{-1}; }

// Szudzik pairing: bijection from a coordinate pair onto a single integer.
// For 16-bit coordinates every code fits in 32 bits (max is 2^32 - 1).
inline uint32_t szudzik_pair(Pixel p) {
  const uint32_t x = p.x;
  const uint32_t y = p.y;
  return x >= y ? x * x + x + y : y * y + x;
}

inline Pixel szudzik_unpair(uint64_t code) {
  if (code > 0xFFFFFFFFull)
    throw data_error("szudzik code out of range for 16-bit pixels");
  uint64_t b = static_cast<uint64_t>(std::sqrt(static_cast<double>(code)));
  while (b * b > code) --b;
  while ((b + 1) * (b + 1) <= code) ++b;
  const uint64_t r = code - b * b;
  if (r < b) return Pixel{static_cast<uint16_t>(r), static_cast<uint16_t>(b)};
  return Pixel{static_cast<uint16_t>(b), static_cast<uint16_t>(r - b)};
}

inline uint32_t l1_space(Pixel a, Pixel b) {
  const uint32_t dx = a.x > b.x ? a.x - b.x : b.x - a.x;
  const uint32_t dy = a.y > b.y ? a.y - b.y : b.y - a.y;
  return dx + dy;
}

inline uint64_t l1_time(uint64_t a, uint64_t b) { return a > b ? a - b : b - a; }

// Canonical event order: (timestamp, szudzik code, polarity) ascending.
// Ties beyond that are exact duplicates, so the order is total and
// serializations of equal multisets are byte-identical.
inline bool canonical_less(const Event& a, const Event& b) {
  if (a.t != b.t) return a.t < b.t;
  const uint32_t ca = szudzik_pair(a.px);
  const uint32_t cb = szudzik_pair(b.px);
  if (ca != cb) return ca < cb;
  return a.p < b.p;
}

inline EventStream canonical_sort(EventStream s) {
  std::sort(s.events.begin(), s.events.end(), canonical_less);
  return s;
}

inline LabeledStream canonical_sort(LabeledStream ls) {
  const size_t n = ls.stream.events.size();
  std::vector<uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(), [&](uint32_t a, uint32_t b) {
    return canonical_less(ls.stream.events[a], ls.stream.events[b]);
  });
  LabeledStream out;
  out.stream.width = ls.stream.width;
  out.stream.height = ls.stream.height;
  out.stream.events.reserve(n);
  out.labels.reserve(n);
  for (uint32_t i : order) {
    out.stream.events.push_back(ls.stream.events[i]);
    out.labels.push_back(ls.labels[i]);
  }
  return out;
}

inline void validate_stream(const EventStream& s) {
  if (s.width == 0 || s.height == 0)
    throw data_error("stream resolution must be at least 1x1");
  for (const Event& e : s.events) {
    if (e.px.x >= s.width || e.px.y >= s.height)
      throw data_error("event pixel outside the sensor resolution");
    if (e.p != 1 && e.p != -1) throw data_error("event polarity must be -1 or 1");
  }
}

// The set of pixels hosting at least one event, stored as ascending szudzik
// codes.
class SpatialPlane {
 public:
  SpatialPlane() = default;

  static SpatialPlane from_codes(std::vector<uint32_t> codes) {
    std::sort(codes.begin(), codes.end());
    codes.erase(std::unique(codes.begin(), codes.end()), codes.end());
    SpatialPlane p;
    p.codes_ = std::move(codes);
    return p;
  }

  static SpatialPlane from_pixels(std::span<const Pixel> pixels) {
    std::vector<uint32_t> codes;
    codes.reserve(pixels.size());
    for (Pixel p : pixels) codes.push_back(szudzik_pair(p));
    return from_codes(std::move(codes));
  }

  bool contains(Pixel p) const {
    return std::binary_search(codes_.begin(), codes_.end(), szudzik_pair(p));
  }

  size_t size() const { return codes_.size(); }
  bool empty() const { return codes_.empty(); }
  const std::vector<uint32_t>& codes() const { return codes_; }

  std::vector<Pixel> pixels() const {
    std::vector<Pixel> out;
    out.reserve(codes_.size());
    for (uint32_t c : codes_) out.push_back(szudzik_unpair(c));
    return out;
  }

  friend bool operator==(const SpatialPlane&, const SpatialPlane&) = default;

 private:
  std::vector<uint32_t> codes_;  // sorted, unique
};

inline SpatialPlane project_plane(const EventStream& s) {
  std::vector<uint32_t> codes;
  codes.reserve(s.events.size());
  for (const Event& e : s.events) codes.push_back(szudzik_pair(e.px));
  return SpatialPlane::from_codes(std::move(codes));
}

// Offsets of the L1 ball surface out to `radius`, shell by shell. Within a
// shell the axis steps come first: (+d,0), (-d,0), (0,+d), (0,-d), then the
// mixed-sign points. BFS fill order depends on this sequence, so it is part
// of the deterministic-output contract.
inline std::vector<std::pair<int, int>> ball_offsets(uint32_t radius) {
  std::vector<std::pair<int, int>> out;
  for (int d = 1; d <= static_cast<int>(radius); ++d) {
    out.emplace_back(d, 0);
    out.emplace_back(-d, 0);
    out.emplace_back(0, d);
    out.emplace_back(0, -d);
    for (int a = 1; a < d; ++a) {
      const int b = d - a;
      out.emplace_back(a, b);
      out.emplace_back(a, -b);
      out.emplace_back(-a, b);
      out.emplace_back(-a, -b);
    }
  }
  return out;
}

}  // namespace evtcrypt
