#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "evtcrypt/encrypt.hpp"
#include "evtcrypt/errors.hpp"
#include "evtcrypt/event.hpp"
#include "evtcrypt/io.hpp"
#include "evtcrypt/splitmix64.hpp"

// Measurement and visualization: SNR scoring of labeled streams, event-frame
// rendering with PGM export, a frame-correlation metric, synthetic scene
// generation for experiments, and an encryption throughput benchmark.

namespace evtcrypt {

// --- event frames ------------------------------------------------------------

struct EventFrame {
  uint16_t width = 0;
  uint16_t height = 0;
  std::vector<int64_t> values;    // per-pixel polarity sum, row-major
  std::vector<uint8_t> rendered;  // 128-centered gray, row-major

  bool operator==(const EventFrame&) const = default;
};

// Accumulates polarities of events with t in [t0, t1] (inclusive) and
// normalizes symmetrically around mid-gray: 128 + round(127*v/maxabs).
// Zero accumulation renders as uniform 128.
inline EventFrame render_frame(const EventStream& stream, uint64_t t0, uint64_t t1) {
  if (t0 > t1) throw data_error("frame window start exceeds its end");
  validate_stream(stream);
  EventFrame f;
  f.width = stream.width;
  f.height = stream.height;
  f.values.assign(static_cast<size_t>(f.width) * f.height, 0);
  for (const Event& e : stream.events)
    if (e.t >= t0 && e.t <= t1)
      f.values[static_cast<size_t>(e.px.y) * f.width + e.px.x] += e.p;

  int64_t maxabs = 1;
  for (int64_t v : f.values) maxabs = std::max(maxabs, std::abs(v));
  f.rendered.resize(f.values.size());
  for (size_t i = 0; i < f.values.size(); ++i) {
    // llround (half away from zero) keeps negation symmetric, so a frame and
    // its polarity-inverse render mirrored around 128 exactly.
    const long long g =
        128 + std::llround(127.0 * static_cast<double>(f.values[i]) /
                           static_cast<double>(maxabs));
    f.rendered[i] = static_cast<uint8_t>(g);
  }
  return f;
}

inline std::string to_pgm(const EventFrame& f) {
  std::string out = "P5\n" + std::to_string(f.width) + " " +
                    std::to_string(f.height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(f.rendered.data()), f.rendered.size());
  return out;
}

inline void write_pgm(const EventFrame& f, const std::filesystem::path& path) {
  detail::write_file(path, to_pgm(f));
}

// Pearson correlation of the rendered pixel arrays, clamped to [-1, 1].
// A constant frame has no variance to correlate against and scores 0.
inline double frame_similarity(const EventFrame& a, const EventFrame& b) {
  if (a.width != b.width || a.height != b.height)
    throw data_error("frame dimension mismatch");
  const size_t n = a.rendered.size();
  double mean_a = 0, mean_b = 0;
  for (size_t i = 0; i < n; ++i) {
    mean_a += a.rendered[i];
    mean_b += b.rendered[i];
  }
  mean_a /= static_cast<double>(n);
  mean_b /= static_cast<double>(n);
  double cov = 0, var_a = 0, var_b = 0;
  for (size_t i = 0; i < n; ++i) {
    const double da = a.rendered[i] - mean_a;
    const double db = b.rendered[i] - mean_b;
    cov += da * db;
    var_a += da * da;
    var_b += db * db;
  }
  if (var_a == 0.0 || var_b == 0.0) return 0.0;
  return std::clamp(cov / std::sqrt(var_a * var_b), -1.0, 1.0);
}

// --- SNR ----------------------------------------------------------------------

struct SnrResult {
  uint64_t signal = 0;  // label-1 events
  uint64_t noise = 0;   // label-0 events
  double ratio = 0.0;   // signal/noise, linear (not dB); +inf when noise == 0
  bool infinite = false;
};

inline SnrResult snr(const LabeledStream& labeled) {
  if (labeled.labels.size() != labeled.stream.events.size())
    throw data_error("label count does not match event count");
  SnrResult r;
  for (uint8_t b : labeled.labels) (b ? r.signal : r.noise)++;
  r.infinite = r.noise == 0;
  r.ratio = r.infinite ? std::numeric_limits<double>::infinity()
                       : static_cast<double>(r.signal) / static_cast<double>(r.noise);
  return r;
}

// --- synthetic scenes -----------------------------------------------------------

enum class SceneKind {
  edge_sweep,  // vertical edge crossing the frame at constant velocity
  two_blobs,   // two static disc-shaped emitters of opposite polarity
};

// Deterministic synthetic recordings. `rate` is events per second; the event
// count is floor(rate * duration / 1e6). Every generated event is signal
// (label 1). The edge sweep keeps its events inside the central half of the
// rows so the frame retains untouched background — encrypting it then changes
// most pixels, which is what the experiments need to show.
inline LabeledStream generate_scene(SceneKind kind, uint16_t width, uint16_t height,
                                    uint64_t duration_us, uint64_t rate, uint64_t seed) {
  if (width < 1 || height < 1) throw data_error("scene resolution must be >= 1x1");
  if (duration_us < 1) throw data_error("scene duration must be >= 1 microsecond");
  const uint64_t count =
      static_cast<uint64_t>(static_cast<unsigned __int128>(rate) * duration_us /
                            1000000u);

  LabeledStream out;
  out.stream.width = width;
  out.stream.height = height;
  out.stream.events.reserve(count);
  Splitmix64 rng(seed);

  if (kind == SceneKind::edge_sweep) {
    uint16_t band_lo = height / 4;
    uint16_t band_h = static_cast<uint16_t>(height - 2 * (height / 4));
    if (band_h < 1) {
      band_lo = 0;
      band_h = height;
    }
    for (uint64_t i = 0; i < count; ++i) {
      const uint64_t t = static_cast<uint64_t>(
          static_cast<unsigned __int128>(i) * duration_us / count);
      const uint16_t x_edge = static_cast<uint16_t>(
          static_cast<unsigned __int128>(width) * t / duration_us);
      const uint16_t y = static_cast<uint16_t>(band_lo + rng.below(band_h));
      if (i % 2 == 0) {
        out.stream.events.push_back(Event{t, Pixel{x_edge, y}, +1});
      } else {
        const uint16_t x = x_edge > 0 ? static_cast<uint16_t>(x_edge - 1) : 0;
        out.stream.events.push_back(Event{t, Pixel{x, y}, -1});
      }
    }
  } else {
    const Pixel centers[2] = {Pixel{static_cast<uint16_t>(width / 4),
                                    static_cast<uint16_t>(height / 2)},
                              Pixel{static_cast<uint16_t>(3 * width / 4),
                                    static_cast<uint16_t>(height / 2)}};
    const double radius = std::max<uint32_t>(1, std::min(width, height) / 6);
    for (uint64_t i = 0; i < count; ++i) {
      const uint64_t t = static_cast<uint64_t>(
          static_cast<unsigned __int128>(i) * duration_us / count);
      const size_t blob = i & 1;
      // Draw order per event: angle, then radial distance.
      const double angle = rng.unit() * 6.283185307179586;
      const double r = rng.unit() * radius;
      int64_t x = centers[blob].x + std::llround(std::cos(angle) * r);
      int64_t y = centers[blob].y + std::llround(std::sin(angle) * r);
      x = std::clamp<int64_t>(x, 0, width - 1);
      y = std::clamp<int64_t>(y, 0, height - 1);
      out.stream.events.push_back(Event{
          t, Pixel{static_cast<uint16_t>(x), static_cast<uint16_t>(y)},
          static_cast<int8_t>(blob == 0 ? +1 : -1)});
    }
  }
  out.labels.assign(out.stream.events.size(), 1);
  return canonical_sort(std::move(out));
}

// --- benchmark -------------------------------------------------------------------

struct BenchReport {
  uint64_t trials = 0;
  uint64_t events_per_trial = 0;
  uint64_t total_events = 0;
  double p50_ms = 0.0;
  double p95_ms = 0.0;
  double events_per_sec = 0.0;
};

// Times encrypt() on a fixed synthetic scene. One-second edge sweep, so
// `event_count` is both the rate and the per-trial input size. Percentiles
// are nearest-rank over per-trial wall times.
inline BenchReport bench_encrypt(uint16_t width, uint16_t height, uint64_t event_count,
                                 uint64_t trials) {
  if (trials < 1) throw data_error("benchmark needs at least one trial");
  const LabeledStream scene =
      generate_scene(SceneKind::edge_sweep, width, height, 1000000, event_count, 42);
  if (scene.stream.events.empty()) throw data_error("benchmark scene is empty");

  std::vector<double> ms;
  ms.reserve(trials);
  for (uint64_t i = 0; i < trials; ++i) {
    EncryptConfig cfg;
    cfg.seed = i + 1;
    const auto start = std::chrono::steady_clock::now();
    const EncryptedBundle bundle = encrypt(scene.stream, cfg);
    const auto stop = std::chrono::steady_clock::now();
    if (bundle.stream.events.size() < scene.stream.events.size())
      throw data_error("benchmark encryption shrank the stream");  // unreachable guard
    ms.push_back(std::chrono::duration<double, std::milli>(stop - start).count());
  }
  std::sort(ms.begin(), ms.end());
  const auto rank = [&](double q) {
    const size_t idx = static_cast<size_t>(
        std::ceil(q * static_cast<double>(ms.size()))) - 1;
    return ms[std::min(idx, ms.size() - 1)];
  };

  BenchReport r;
  r.trials = trials;
  r.events_per_trial = scene.stream.events.size();
  r.total_events = r.events_per_trial * trials;
  r.p50_ms = rank(0.50);
  r.p95_ms = rank(0.95);
  r.events_per_sec =
      static_cast<double>(r.events_per_trial) * 1000.0 / std::max(r.p50_ms, 1e-6);
  return r;
}

}  // namespace evtcrypt
