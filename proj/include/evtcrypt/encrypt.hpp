#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "evtcrypt/errors.hpp"
#include "evtcrypt/event.hpp"
#include "evtcrypt/splitmix64.hpp"

// The encryption pipeline. encrypt() hides the scene by flooding every
// maskable pixel with noise whose per-pixel density and timing are derived
// from the true events, then scrambling all polarities with a reversible
// per-pixel map. The key is the set of true-event pixels; decrypt() keeps
// only those pixels' events and un-scrambles their polarities, recovering
// the original stream exactly.

namespace evtcrypt {

enum class MaskMode {
  full_complement,  // every sensor pixel that hosts no true event
  dilated_band,     // only pixels within L1 radius `band_radius` of a true pixel
};

struct EncryptConfig {
  double sigma = 0.05;         // timestamp scaling per unit of L1 distance
  uint32_t spatial_threshold = 1;  // neighbor reach, inclusive L1 bound
  // Absolute cap on |noise t - parent t| in microseconds. Unset means the
  // adaptive default: the per-hop drift sigma*spatial_threshold*t_parent is
  // accepted as-is, which every synthesized timestamp satisfies by
  // construction. When set, out-of-range timestamps are clamped (not
  // dropped — dropping would leave unfilled pixels that betray the scene).
  std::optional<uint64_t> t_threshold;
  uint64_t seed = 0;
  MaskMode mask_mode = MaskMode::full_complement;
  uint32_t band_radius = 1;  // only used in dilated_band mode
};

inline void validate_config(const EncryptConfig& cfg) {
  if (!(cfg.sigma >= 0.0))  // negation catches NaN
    throw data_error("sigma must be >= 0");
  if (cfg.spatial_threshold < 1) throw data_error("spatial threshold must be >= 1");
  if (cfg.t_threshold && *cfg.t_threshold < 1)
    throw data_error("temporal threshold must be >= 1 microsecond");
  if (cfg.mask_mode == MaskMode::dilated_band && cfg.band_radius < 1)
    throw data_error("band radius must be >= 1");
}

// Set of pixels still awaiting noise, bitmap-backed for O(1) membership.
class NoiseMask {
 public:
  NoiseMask() = default;
  NoiseMask(uint16_t width, uint16_t height)
      : width_(width), height_(height),
        bits_(static_cast<size_t>(width) * height, 0) {}

  uint16_t width() const { return width_; }
  uint16_t height() const { return height_; }
  size_t size() const { return count_; }
  bool empty() const { return count_ == 0; }

  bool contains(Pixel px) const {
    return px.x < width_ && px.y < height_ && bits_[index(px)];
  }

  void insert(Pixel px) {
    if (!bits_[index(px)]) {
      bits_[index(px)] = 1;
      ++count_;
    }
  }

  void remove(Pixel px) {
    if (bits_[index(px)]) {
      bits_[index(px)] = 0;
      --count_;
    }
  }

  // Row-major enumeration, for tests and mask inspection.
  std::vector<Pixel> pixels() const {
    std::vector<Pixel> out;
    out.reserve(count_);
    for (uint16_t y = 0; y < height_; ++y)
      for (uint16_t x = 0; x < width_; ++x)
        if (bits_[static_cast<size_t>(y) * width_ + x]) out.push_back(Pixel{x, y});
    return out;
  }

 private:
  size_t index(Pixel px) const { return static_cast<size_t>(px.y) * width_ + px.x; }

  uint16_t width_ = 0;
  uint16_t height_ = 0;
  std::vector<uint8_t> bits_;
  size_t count_ = 0;
};

// Mask construction. Either the full complement of the true-event plane or
// a band of pixels within L1 radius `band_radius` of it. Both are disjoint
// from the plane by construction.
inline NoiseMask build_mask(const EventStream& stream, const EncryptConfig& cfg) {
  if (stream.events.empty()) throw data_error("cannot encrypt an empty stream");
  validate_config(cfg);
  const SpatialPlane plane = project_plane(stream);
  NoiseMask mask(stream.width, stream.height);
  if (cfg.mask_mode == MaskMode::full_complement) {
    for (uint16_t y = 0; y < stream.height; ++y)
      for (uint16_t x = 0; x < stream.width; ++x)
        if (!plane.contains(Pixel{x, y})) mask.insert(Pixel{x, y});
    return mask;
  }
  const auto offsets = ball_offsets(cfg.band_radius);
  for (Pixel center : plane.pixels()) {
    for (auto [dx, dy] : offsets) {
      const int64_t x = static_cast<int64_t>(center.x) + dx;
      const int64_t y = static_cast<int64_t>(center.y) + dy;
      if (x < 0 || x >= stream.width || y < 0 || y >= stream.height) continue;
      const Pixel px{static_cast<uint16_t>(x), static_cast<uint16_t>(y)};
      if (!plane.contains(px)) mask.insert(px);
    }
  }
  return mask;
}

// Mask pixels within (inclusive) L1 distance spatial_threshold of `center`,
// in the deterministic shell order of ball_offsets. With the default
// threshold of 1 this is the 4-neighborhood intersected with the mask.
inline std::vector<Pixel> spatial_neighbors(Pixel center, const NoiseMask& mask,
                                            const EncryptConfig& cfg) {
  std::vector<Pixel> out;
  for (auto [dx, dy] : ball_offsets(cfg.spatial_threshold)) {
    const int64_t x = static_cast<int64_t>(center.x) + dx;
    const int64_t y = static_cast<int64_t>(center.y) + dy;
    if (x < 0 || x > 0xFFFF || y < 0 || y > 0xFFFF) continue;
    const Pixel px{static_cast<uint16_t>(x), static_cast<uint16_t>(y)};
    if (mask.contains(px)) out.push_back(px);
  }
  return out;
}

namespace detail {

// Noise timestamp rule: scale the parent timestamp by (1 + sigma*distance),
// round half-up, then clamp into the absolute temporal window if one is
// configured. The multiplier is >= 1, so the result never precedes the
// parent and the clamp direction is always downward toward it.
// (Computed in double: timestamps above 2^53 microseconds — ~285 years —
// lose precision, which is far outside any real recording.)
inline uint64_t noise_timestamp(uint64_t parent_t, uint32_t distance,
                                const EncryptConfig& cfg) {
  const double scaled =
      std::floor(static_cast<double>(parent_t) * (1.0 + cfg.sigma * distance) + 0.5);
  uint64_t t = scaled >= 18446744073709549568.0  // largest double below 2^64
                   ? std::numeric_limits<uint64_t>::max()
                   : static_cast<uint64_t>(scaled);
  if (cfg.t_threshold && l1_time(t, parent_t) >= *cfg.t_threshold) {
    const uint64_t limit = *cfg.t_threshold - 1;
    t = parent_t > std::numeric_limits<uint64_t>::max() - limit
            ? std::numeric_limits<uint64_t>::max()
            : parent_t + limit;
  }
  return t;
}

}  // namespace detail

// One synthesized-noise record: which pixel got the event, which pixel and
// timestamp it was derived from, and the resulting timestamp. Collected
// optionally so tests can check the space/time correlation bounds.
struct NoiseAudit {
  struct Record {
    Pixel target;
    Pixel parent;
    uint64_t parent_t;
    uint64_t t;
  };
  std::vector<Record> records;
};

// Noise for one target pixel: one event per parent event, timestamps scaled
// by the parent-to-target distance, polarities drawn from the stream PRNG.
inline std::vector<Event> synthesize_at(Pixel target, std::span<const Event> parents,
                                        Pixel parent_pixel, const EncryptConfig& cfg,
                                        Splitmix64& rng) {
  const uint32_t d = l1_space(target, parent_pixel);
  std::vector<Event> out;
  out.reserve(parents.size());
  for (const Event& e : parents)
    out.push_back(Event{detail::noise_timestamp(e.t, d, cfg), target, rng.polarity()});
  return out;
}

// Breadth-first noise propagation. Seeds are the true-event pixels in
// ascending szudzik order; each dequeued pixel synthesizes noise at its
// still-unfilled neighbors, and every freshly filled pixel joins the queue
// with its own noise as the parent set for the next ring. On a 4-connected
// grid the full-complement mask is always exhausted. Deterministic for a
// given (stream, cfg.seed). `audit`, when non-null, records every
// synthesized event's parentage.
inline EventStream fill_noise(const EventStream& stream, NoiseMask mask,
                              const EncryptConfig& cfg, NoiseAudit* audit = nullptr) {
  if (stream.events.empty()) throw data_error("cannot encrypt an empty stream");
  validate_config(cfg);
  EventStream out = canonical_sort(stream);

  // Queue nodes reference timestamp runs in a shared pool; indices stay
  // valid as the pool grows.
  struct Node {
    Pixel px;
    size_t off;
    size_t len;
  };
  std::vector<uint64_t> ts_pool;
  ts_pool.reserve(out.events.size());
  std::vector<Node> queue;

  // Group the canonical events by pixel. Sorting indices by szudzik code
  // (stably, preserving time order within a pixel) yields the seed order.
  std::vector<size_t> order(out.events.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return szudzik_pair(out.events[a].px) < szudzik_pair(out.events[b].px);
  });
  for (size_t i = 0; i < order.size();) {
    const Pixel px = out.events[order[i]].px;
    const size_t off = ts_pool.size();
    size_t j = i;
    for (; j < order.size() && out.events[order[j]].px == px; ++j)
      ts_pool.push_back(out.events[order[j]].t);
    queue.push_back(Node{px, off, j - i});
    i = j;
  }

  Splitmix64 rng(cfg.seed);
  const auto offsets = ball_offsets(cfg.spatial_threshold);
  for (size_t head = 0; head < queue.size(); ++head) {
    const Pixel center = queue[head].px;
    for (auto [dx, dy] : offsets) {
      const int64_t x = static_cast<int64_t>(center.x) + dx;
      const int64_t y = static_cast<int64_t>(center.y) + dy;
      if (x < 0 || x > 0xFFFF || y < 0 || y > 0xFFFF) continue;
      const Pixel target{static_cast<uint16_t>(x), static_cast<uint16_t>(y)};
      if (!mask.contains(target)) continue;
      mask.remove(target);
      const uint32_t d = l1_space(target, center);
      const size_t child_off = ts_pool.size();
      const Node parent = queue[head];  // copy: ts_pool may reallocate below
      for (size_t k = 0; k < parent.len; ++k) {
        const uint64_t parent_t = ts_pool[parent.off + k];
        const uint64_t t = detail::noise_timestamp(parent_t, d, cfg);
        out.events.push_back(Event{t, target, rng.polarity()});
        ts_pool.push_back(t);
        if (audit) audit->records.push_back({target, center, parent_t, t});
      }
      queue.push_back(Node{target, child_off, parent.len});
    }
  }
  return canonical_sort(std::move(out));
}

// Reversible polarity scrambling: flip the polarity bit of every event whose
// pixel has an odd szudzik code. Applying it twice is the identity, which is
// exactly how decryption undoes it.
inline EventStream polarity_map(EventStream stream) {
  for (Event& e : stream.events) {
    const uint8_t bit = pol_bit(e.p) ^ static_cast<uint8_t>(szudzik_pair(e.px) & 1u);
    e.p = bit_pol(bit);
  }
  return stream;
}

struct EncryptedBundle {
  EventStream stream;      // noise-flooded, polarity-scrambled
  SpatialPlane key_plane;  // true-event pixels; serialize with write_key
};

inline EncryptedBundle encrypt(const EventStream& stream, const EncryptConfig& cfg,
                               NoiseAudit* audit = nullptr) {
  validate_stream(stream);
  if (stream.events.empty()) throw data_error("cannot encrypt an empty stream");
  EncryptedBundle bundle;
  bundle.key_plane = project_plane(stream);
  // polarity_map keeps event order as-is; flipping polarities can break the
  // (t, code, p) tie order where one pixel has both polarities at one t, so
  // re-canonicalize.
  bundle.stream = canonical_sort(
      polarity_map(fill_noise(stream, build_mask(stream, cfg), cfg, audit)));
  return bundle;
}

// Keeps only events on key-plane pixels, un-scrambles their polarities, and
// restores canonical order. Lossless against encrypt() by construction: noise
// never lands on a plane pixel, and the polarity map is an involution.
inline EventStream decrypt(const EventStream& stream, const SpatialPlane& plane) {
  validate_stream(stream);
  for (Pixel px : plane.pixels())
    if (px.x >= stream.width || px.y >= stream.height)
      throw data_error("key plane pixel outside the stream resolution");
  EventStream out;
  out.width = stream.width;
  out.height = stream.height;
  for (const Event& e : stream.events)
    if (plane.contains(e.px)) out.events.push_back(e);
  return canonical_sort(polarity_map(std::move(out)));
}

}  // namespace evtcrypt
