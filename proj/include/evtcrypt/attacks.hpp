#pragma once

#include <algorithm>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "evtcrypt/encrypt.hpp"
#include "evtcrypt/errors.hpp"
#include "evtcrypt/event.hpp"
#include "evtcrypt/splitmix64.hpp"

// Denoising attacks. These are the adversary's tools: filters that try to
// separate true events from noise. The nearest-neighbor filter keeps events
// with close same-polarity company in space-time; the density filter keeps
// events in well-populated space-time voxels. Both shrink their input, never
// grow it.

namespace evtcrypt {

struct NnfConfig {
  uint32_t t_space = 2;     // strict L1 bound: neighbors need l1_space < t_space
  uint64_t t_time = 5000;   // strict bound in µs: l1_time < t_time
  uint32_t min_neighbors = 1;  // keep an event iff it has at least this many
};

inline void validate_config(const NnfConfig& cfg) {
  if (cfg.t_space < 1) throw data_error("nnf spatial threshold must be >= 1");
  if (cfg.t_time < 1) throw data_error("nnf temporal threshold must be >= 1");
  if (cfg.min_neighbors < 1) throw data_error("nnf neighbor count must be >= 1");
}

namespace detail {

inline uint64_t mix_pair(uint64_t a, uint64_t b) {
  uint64_t h = a * 0x9E3779B97F4A7C15ull ^ (b + 0xBF58476D1CE4E5B9ull);
  h ^= h >> 31;
  return h * 0x94D049BB133111EBull;
}

struct PairHash {
  size_t operator()(const std::pair<uint64_t, uint64_t>& p) const {
    return static_cast<size_t>(mix_pair(p.first, p.second));
  }
};

// Reference neighbor count: every other event, compared directly.
inline bool nnf_keep_reference(const EventStream& s, size_t i, const NnfConfig& cfg) {
  const Event& e = s.events[i];
  uint32_t found = 0;
  for (size_t j = 0; j < s.events.size(); ++j) {
    if (j == i) continue;
    const Event& o = s.events[j];
    if (o.p != e.p) continue;
    if (l1_space(o.px, e.px) >= cfg.t_space) continue;
    if (l1_time(o.t, e.t) >= cfg.t_time) continue;
    if (++found >= cfg.min_neighbors) return true;
  }
  return false;
}

// Keep flags for a canonical stream, computed with a per-(pixel, polarity)
// sorted-timestamp index. Must agree with nnf_keep_reference event for event.
inline std::vector<uint8_t> nnf_keep_mask(const EventStream& s, const NnfConfig& cfg) {
  // Canonical order is timestamp-major, so each bucket fills already sorted.
  std::unordered_map<uint64_t, std::vector<uint64_t>> by_px_pol;
  for (const Event& e : s.events)
    by_px_pol[(static_cast<uint64_t>(szudzik_pair(e.px)) << 1) | pol_bit(e.p)]
        .push_back(e.t);

  std::vector<std::pair<int, int>> offsets = {{0, 0}};
  for (auto o : ball_offsets(cfg.t_space - 1)) offsets.push_back(o);
  const uint64_t dt = cfg.t_time - 1;  // strict < t_time ⇔ |Δt| ≤ t_time−1

  std::vector<uint8_t> keep(s.events.size(), 0);
  for (size_t i = 0; i < s.events.size(); ++i) {
    const Event& e = s.events[i];
    const uint64_t lo = e.t > dt ? e.t - dt : 0;
    const uint64_t hi = e.t > std::numeric_limits<uint64_t>::max() - dt
                            ? std::numeric_limits<uint64_t>::max()
                            : e.t + dt;
    uint64_t found = 0;
    for (auto [dx, dy] : offsets) {
      const int64_t x = static_cast<int64_t>(e.px.x) + dx;
      const int64_t y = static_cast<int64_t>(e.px.y) + dy;
      if (x < 0 || x >= s.width || y < 0 || y >= s.height) continue;
      const Pixel px{static_cast<uint16_t>(x), static_cast<uint16_t>(y)};
      const auto it =
          by_px_pol.find((static_cast<uint64_t>(szudzik_pair(px)) << 1) | pol_bit(e.p));
      if (it == by_px_pol.end()) continue;
      const std::vector<uint64_t>& ts = it->second;
      uint64_t n = std::upper_bound(ts.begin(), ts.end(), hi) -
                   std::lower_bound(ts.begin(), ts.end(), lo);
      if (dx == 0 && dy == 0) --n;  // the window always contains the event itself
      found += n;
      if (found >= cfg.min_neighbors) break;
    }
    keep[i] = found >= cfg.min_neighbors;
  }
  return keep;
}

inline EventStream apply_keep(const EventStream& s, const std::vector<uint8_t>& keep) {
  EventStream out;
  out.width = s.width;
  out.height = s.height;
  for (size_t i = 0; i < s.events.size(); ++i)
    if (keep[i]) out.events.push_back(s.events[i]);
  return out;
}

inline LabeledStream apply_keep(const LabeledStream& s, const std::vector<uint8_t>& keep) {
  LabeledStream out;
  out.stream.width = s.stream.width;
  out.stream.height = s.stream.height;
  for (size_t i = 0; i < s.stream.events.size(); ++i) {
    if (!keep[i]) continue;
    out.stream.events.push_back(s.stream.events[i]);
    out.labels.push_back(s.labels[i]);
  }
  return out;
}

}  // namespace detail

// Nearest-neighbor filter: an event survives iff at least min_neighbors other
// events sit strictly within t_space (L1, pixels) and t_time (µs) of it with
// the same polarity.
inline EventStream nnf_filter(const EventStream& stream, const NnfConfig& cfg = {}) {
  validate_config(cfg);
  const EventStream s = canonical_sort(stream);
  return detail::apply_keep(s, detail::nnf_keep_mask(s, cfg));
}

inline LabeledStream nnf_filter(const LabeledStream& labeled, const NnfConfig& cfg = {}) {
  validate_config(cfg);
  if (labeled.labels.size() != labeled.stream.events.size())
    throw data_error("label count does not match event count");
  const LabeledStream s = canonical_sort(labeled);
  return detail::apply_keep(s, detail::nnf_keep_mask(s.stream, cfg));
}

// Brute-force twin of nnf_filter, kept as the behavioral reference the
// indexed version is tested against. Quadratic: use only on small inputs.
inline EventStream nnf_filter_reference(const EventStream& stream,
                                        const NnfConfig& cfg = {}) {
  validate_config(cfg);
  const EventStream s = canonical_sort(stream);
  std::vector<uint8_t> keep(s.events.size(), 0);
  for (size_t i = 0; i < s.events.size(); ++i)
    keep[i] = detail::nnf_keep_reference(s, i, cfg);
  return detail::apply_keep(s, keep);
}

struct Voxel {
  uint32_t dx = 1;  // pixels
  uint32_t dy = 1;  // pixels
  uint64_t dt = 1;  // µs
};

// Density filter: bucket events into (dx × dy × dt) voxels and keep the ones
// whose voxel holds at least min_count events.
inline EventStream density_filter(const EventStream& stream, Voxel voxel,
                                  uint64_t min_count) {
  if (voxel.dx < 1 || voxel.dy < 1 || voxel.dt < 1)
    throw data_error("voxel dimensions must be >= 1");
  const EventStream s = canonical_sort(stream);
  const auto key = [&](const Event& e) {
    const uint64_t spatial =
        (static_cast<uint64_t>(e.px.x / voxel.dx) << 16) | (e.px.y / voxel.dy);
    return std::pair<uint64_t, uint64_t>(spatial, e.t / voxel.dt);
  };
  std::unordered_map<std::pair<uint64_t, uint64_t>, uint64_t, detail::PairHash> counts;
  for (const Event& e : s.events) ++counts[key(e)];
  std::vector<uint8_t> keep(s.events.size(), 0);
  for (size_t i = 0; i < s.events.size(); ++i)
    keep[i] = counts[key(s.events[i])] >= min_count;
  return detail::apply_keep(s, keep);
}

inline LabeledStream density_filter(const LabeledStream& labeled, Voxel voxel,
                                    uint64_t min_count) {
  if (labeled.labels.size() != labeled.stream.events.size())
    throw data_error("label count does not match event count");
  const LabeledStream s = canonical_sort(labeled);
  const EventStream filtered = density_filter(s.stream, voxel, min_count);
  // Rebuild keep flags by walking both canonical sequences in lock step.
  std::vector<uint8_t> keep(s.stream.events.size(), 0);
  size_t j = 0;
  for (size_t i = 0; i < s.stream.events.size() && j < filtered.events.size(); ++i)
    if (s.stream.events[i] == filtered.events[j]) {
      keep[i] = 1;
      ++j;
    }
  return detail::apply_keep(s, keep);
}

// Baseline degradation from the evaluation protocol: blend uniform random
// noise into a clean stream until signal/noise reaches target_snr. Noise
// pixels are uniform over the sensor, timestamps uniform over the stream's
// time span, polarities fair coin flips. Originals carry label 1, noise 0.
inline LabeledStream inject_random_noise(const EventStream& stream, double target_snr,
                                         uint64_t seed) {
  validate_stream(stream);
  if (stream.events.empty()) throw data_error("cannot inject noise into an empty stream");
  if (!(target_snr > 0.0)) throw data_error("target snr must be > 0");

  uint64_t t_min = std::numeric_limits<uint64_t>::max();
  uint64_t t_max = 0;
  for (const Event& e : stream.events) {
    t_min = std::min(t_min, e.t);
    t_max = std::max(t_max, e.t);
  }
  const uint64_t span = t_max - t_min + 1;  // 0 means the full u64 range

  LabeledStream out;
  out.stream = canonical_sort(stream);
  out.labels.assign(out.stream.events.size(), 1);

  const uint64_t n_noise =
      static_cast<uint64_t>(std::floor(static_cast<double>(stream.events.size()) /
                                       target_snr));
  Splitmix64 rng(seed);
  for (uint64_t i = 0; i < n_noise; ++i) {
    // Draw order per event: x, y, timestamp, polarity.
    const uint16_t x = static_cast<uint16_t>(rng.below(stream.width));
    const uint16_t y = static_cast<uint16_t>(rng.below(stream.height));
    const uint64_t t = span == 0 ? rng() : t_min + rng.below(span);
    out.stream.events.push_back(Event{t, Pixel{x, y}, rng.polarity()});
    out.labels.push_back(0);
  }
  return canonical_sort(std::move(out));
}

// Ground-truth labels for an encrypted stream: an event counts as signal iff
// its pixel lies on the original's plane and, after undoing the polarity
// scramble, it coincides with a not-yet-matched original event.
inline LabeledStream label_encrypted(const EventStream& original,
                                     const EventStream& encrypted) {
  if (original.width != encrypted.width || original.height != encrypted.height)
    throw data_error("original/encrypted resolution mismatch");
  const SpatialPlane plane = project_plane(original);

  using Key = std::pair<uint64_t, uint64_t>;  // (timestamp, code<<1 | polarity bit)
  std::unordered_map<Key, uint64_t, detail::PairHash> budget;
  for (const Event& e : original.events) {
    const uint64_t code = szudzik_pair(e.px);
    ++budget[Key(e.t, (code << 1) | pol_bit(e.p))];
  }

  LabeledStream out;
  out.stream = canonical_sort(encrypted);
  out.labels.reserve(out.stream.events.size());
  for (const Event& e : out.stream.events) {
    uint8_t label = 0;
    if (plane.contains(e.px)) {
      const uint64_t code = szudzik_pair(e.px);
      const uint8_t unscrambled = pol_bit(e.p) ^ static_cast<uint8_t>(code & 1u);
      const auto it = budget.find(Key(e.t, (code << 1) | unscrambled));
      if (it != budget.end() && it->second > 0) {
        --it->second;
        label = 1;
      }
    }
    out.labels.push_back(label);
  }
  return out;
}

}  // namespace evtcrypt
