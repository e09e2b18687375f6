#include "evtcrypt/analysis.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <string>
#include <vector>

#include "evtcrypt/event.hpp"
#include "evtcrypt/io.hpp"
#include "evtcrypt/splitmix64.hpp"

using namespace evtcrypt;

namespace {

TEST(Snr, HandValues) {
  LabeledStream ls;
  ls.stream.width = 4;
  ls.stream.height = 4;
  for (int i = 0; i < 500; ++i) {
    ls.stream.events.push_back({static_cast<uint64_t>(i), {0, 0}, 1});
    ls.labels.push_back(1);
  }
  for (int i = 0; i < 500; ++i) {
    ls.stream.events.push_back({static_cast<uint64_t>(i), {1, 1}, 1});
    ls.labels.push_back(0);
  }
  const SnrResult r = snr(ls);
  EXPECT_EQ(r.signal, 500u);
  EXPECT_EQ(r.noise, 500u);
  EXPECT_DOUBLE_EQ(r.ratio, 1.0);
  EXPECT_FALSE(r.infinite);
}

TEST(Snr, ZeroNoiseIsFlaggedInfinite) {
  LabeledStream ls;
  ls.stream.width = 2;
  ls.stream.height = 2;
  for (int i = 0; i < 100; ++i) {
    ls.stream.events.push_back({static_cast<uint64_t>(i), {0, 0}, 1});
    ls.labels.push_back(1);
  }
  const SnrResult r = snr(ls);
  EXPECT_TRUE(r.infinite);
  EXPECT_TRUE(std::isinf(r.ratio));
  EXPECT_EQ(r.signal, 100u);
  EXPECT_EQ(r.noise, 0u);
}

TEST(Snr, ThirtySixtyIsHalf) {
  LabeledStream ls;
  ls.stream.width = 2;
  ls.stream.height = 2;
  for (int i = 0; i < 90; ++i) {
    ls.stream.events.push_back({static_cast<uint64_t>(i), {0, 0}, 1});
    ls.labels.push_back(i < 30 ? 1 : 0);
  }
  EXPECT_DOUBLE_EQ(snr(ls).ratio, 0.5);
}

TEST(Snr, LabelCountMismatchIsRejected) {
  LabeledStream ls;
  ls.stream = EventStream{2, 2, {{1, {0, 0}, 1}}};
  ls.labels = {1, 0};
  EXPECT_THROW(snr(ls), data_error);
}

TEST(RenderFrame, EmptyWindowIsUniformGray) {
  EventStream s{3, 3, {{500, {1, 1}, 1}}};
  const EventFrame f = render_frame(s, 0, 100);
  for (uint8_t g : f.rendered) EXPECT_EQ(g, 128);
}

TEST(RenderFrame, SinglePositiveEventSaturatesItsPixel) {
  EventStream s{3, 3, {{10, {1, 1}, 1}}};
  const EventFrame f = render_frame(s, 0, 100);
  EXPECT_EQ(f.rendered[1 * 3 + 1], 255);
  EXPECT_EQ(f.rendered[0], 128);
  EXPECT_EQ(f.values[1 * 3 + 1], 1);
}

TEST(RenderFrame, OppositePolaritiesCancel) {
  EventStream s{3, 3, {{10, {1, 1}, 1}, {20, {1, 1}, -1}, {10, {0, 0}, 1}}};
  const EventFrame f = render_frame(s, 0, 100);
  EXPECT_EQ(f.rendered[1 * 3 + 1], 128);
  EXPECT_EQ(f.values[1 * 3 + 1], 0);
}

TEST(RenderFrame, WindowBoundsAreInclusive) {
  EventStream s{2, 2, {{100, {0, 0}, 1}, {200, {1, 1}, 1}}};
  const EventFrame f = render_frame(s, 100, 200);
  EXPECT_EQ(f.values[0], 1);
  EXPECT_EQ(f.values[3], 1);
}

TEST(RenderFrame, RejectsInvertedWindow) {
  EventStream s{2, 2, {}};
  EXPECT_THROW(render_frame(s, 10, 9), data_error);
}

TEST(RenderFrame, NegativeAccumulationDarkens) {
  EventStream s{2, 2, {{1, {0, 0}, -1}, {2, {0, 0}, -1}, {3, {1, 1}, 1}}};
  const EventFrame f = render_frame(s, 0, 10);
  EXPECT_EQ(f.values[0], -2);
  EXPECT_EQ(f.rendered[0], 1);    // 128 + round(127 * -2/2)
  EXPECT_EQ(f.rendered[3], 192);  // 128 + round(127 * 1/2) = 128 + 64
}

TEST(RenderFrame, ShiftEquivariance) {
  Splitmix64 rng(60);
  EventStream base{16, 16, {}};
  for (int i = 0; i < 200; ++i)
    base.events.push_back({rng.below(1000),
                           Pixel{static_cast<uint16_t>(rng.below(8)),
                                 static_cast<uint16_t>(rng.below(8))},
                           rng.polarity()});
  EventStream shifted = base;
  for (Event& e : shifted.events) {
    e.px.x = static_cast<uint16_t>(e.px.x + 3);
    e.px.y = static_cast<uint16_t>(e.px.y + 5);
  }
  const EventFrame fb = render_frame(base, 0, 1000);
  const EventFrame fs = render_frame(shifted, 0, 1000);
  for (uint16_t y = 0; y < 8; ++y)
    for (uint16_t x = 0; x < 8; ++x)
      ASSERT_EQ(fs.values[(y + 5) * 16 + (x + 3)], fb.values[y * 16 + x]);
}

TEST(Pgm, HeaderAndPayload) {
  EventStream s{3, 2, {{10, {1, 1}, 1}}};
  const std::string pgm = to_pgm(render_frame(s, 0, 100));
  const std::string header = "P5\n3 2\n255\n";
  ASSERT_EQ(pgm.substr(0, header.size()), header);
  EXPECT_EQ(pgm.size(), header.size() + 6);
}

TEST(FrameSimilarity, SelfIsOne) {
  EventStream s{4, 4, {{10, {1, 1}, 1}, {20, {2, 2}, -1}}};
  const EventFrame f = render_frame(s, 0, 100);
  EXPECT_DOUBLE_EQ(frame_similarity(f, f), 1.0);
}

TEST(FrameSimilarity, NegationIsMinusOne) {
  EventStream s{4, 4, {{10, {1, 1}, 1}, {20, {2, 2}, -1}}};
  EventStream neg = s;
  for (Event& e : neg.events) e.p = static_cast<int8_t>(-e.p);
  EXPECT_DOUBLE_EQ(
      frame_similarity(render_frame(s, 0, 100), render_frame(neg, 0, 100)), -1.0);
}

TEST(FrameSimilarity, ConstantFrameScoresZero) {
  EventStream empty{4, 4, {}};
  EventStream s{4, 4, {{10, {1, 1}, 1}}};
  EXPECT_EQ(frame_similarity(render_frame(empty, 0, 1), render_frame(s, 0, 100)), 0.0);
}

TEST(FrameSimilarity, SymmetricAndBounded) {
  Splitmix64 rng(61);
  EventStream a{8, 8, {}}, b{8, 8, {}};
  for (int i = 0; i < 100; ++i) {
    a.events.push_back({rng.below(100),
                        Pixel{static_cast<uint16_t>(rng.below(8)),
                              static_cast<uint16_t>(rng.below(8))},
                        rng.polarity()});
    b.events.push_back({rng.below(100),
                        Pixel{static_cast<uint16_t>(rng.below(8)),
                              static_cast<uint16_t>(rng.below(8))},
                        rng.polarity()});
  }
  const EventFrame fa = render_frame(a, 0, 100);
  const EventFrame fb = render_frame(b, 0, 100);
  const double ab = frame_similarity(fa, fb);
  EXPECT_DOUBLE_EQ(ab, frame_similarity(fb, fa));
  EXPECT_GE(ab, -1.0);
  EXPECT_LE(ab, 1.0);
}

TEST(FrameSimilarity, DimensionMismatchIsRejected) {
  EventStream a{4, 4, {}}, b{5, 4, {}};
  EXPECT_THROW(frame_similarity(render_frame(a, 0, 1), render_frame(b, 0, 1)),
               data_error);
}

TEST(GenerateScene, EdgeSweepCountAndBounds) {
  const LabeledStream scene =
      generate_scene(SceneKind::edge_sweep, 10, 8, 1000, 1000000, 1);
  EXPECT_EQ(scene.stream.events.size(), 1000u);  // rate * duration / 1e6
  EXPECT_EQ(scene.labels.size(), 1000u);
  for (const Event& e : scene.stream.events) {
    ASSERT_LT(e.px.x, 10);
    ASSERT_LT(e.px.y, 8);
    ASSERT_LT(e.t, 1000u);
  }
  for (uint8_t b : scene.labels) ASSERT_EQ(b, 1);
  EXPECT_TRUE(std::is_sorted(scene.stream.events.begin(), scene.stream.events.end(),
                             [](const Event& x, const Event& y) { return x.t < y.t; }));
}

TEST(GenerateScene, EdgeSweepFollowsTheMotionLaw) {
  const uint64_t duration = 1000;
  const uint16_t width = 10;
  const LabeledStream scene =
      generate_scene(SceneKind::edge_sweep, width, 8, duration, 1000000, 1);
  for (const Event& e : scene.stream.events) {
    const uint16_t x_edge = static_cast<uint16_t>(
        static_cast<uint64_t>(width) * e.t / duration);
    if (e.p > 0)
      ASSERT_EQ(e.px.x, x_edge);  // leading edge
    else
      ASSERT_EQ(e.px.x, x_edge > 0 ? x_edge - 1 : 0);  // trailing edge
  }
}

TEST(GenerateScene, ZeroRateIsEmpty) {
  const LabeledStream scene = generate_scene(SceneKind::edge_sweep, 10, 8, 1000, 0, 1);
  EXPECT_TRUE(scene.stream.events.empty());
  EXPECT_TRUE(scene.labels.empty());
}

TEST(GenerateScene, DeterministicPerSeed) {
  const LabeledStream a = generate_scene(SceneKind::edge_sweep, 32, 24, 10000, 100000, 5);
  const LabeledStream b = generate_scene(SceneKind::edge_sweep, 32, 24, 10000, 100000, 5);
  EXPECT_EQ(a.stream, b.stream);
  const LabeledStream c = generate_scene(SceneKind::edge_sweep, 32, 24, 10000, 100000, 6);
  EXPECT_NE(write_binary_string(a.stream), write_binary_string(c.stream));
}

TEST(GenerateScene, TwoBlobsStaysNearTheCenters) {
  const uint16_t w = 64, h = 48;
  const LabeledStream scene =
      generate_scene(SceneKind::two_blobs, w, h, 100000, 100000, 2);
  ASSERT_EQ(scene.stream.events.size(), 10000u);
  const Pixel c0{w / 4, h / 2}, c1{3 * w / 4, h / 2};
  const uint32_t radius = std::min(w, h) / 6;
  for (const Event& e : scene.stream.events) {
    const uint32_t d = std::min(l1_space(e.px, c0), l1_space(e.px, c1));
    // L1 distance of a point on a Euclidean disc of radius r is at most
    // r*sqrt(2), plus 1 for rounding slack.
    ASSERT_LE(d, static_cast<uint32_t>(radius * 1.4143) + 1);
  }
}

TEST(GenerateScene, TwoBlobsSplitPolarities) {
  const LabeledStream scene =
      generate_scene(SceneKind::two_blobs, 64, 48, 100000, 100000, 2);
  const uint16_t mid = 32;
  for (const Event& e : scene.stream.events) {
    if (e.px.x < mid)
      ASSERT_EQ(e.p, 1);  // left blob emits positive events
    else
      ASSERT_EQ(e.p, -1);
  }
}

TEST(GenerateScene, RejectsDegenerateInputs) {
  EXPECT_THROW(generate_scene(SceneKind::edge_sweep, 0, 8, 1000, 10, 1), data_error);
  EXPECT_THROW(generate_scene(SceneKind::edge_sweep, 8, 0, 1000, 10, 1), data_error);
  EXPECT_THROW(generate_scene(SceneKind::edge_sweep, 8, 8, 0, 10, 1), data_error);
}

TEST(Bench, RejectsZeroTrials) {
  EXPECT_THROW(bench_encrypt(16, 16, 100, 0), data_error);
}

TEST(Bench, ReportsCoherentNumbers) {
  const BenchReport r = bench_encrypt(32, 24, 2000, 3);
  EXPECT_EQ(r.trials, 3u);
  EXPECT_EQ(r.events_per_trial, 2000u);
  EXPECT_EQ(r.total_events, 6000u);
  EXPECT_LE(r.p50_ms, r.p95_ms);
  EXPECT_GT(r.events_per_sec, 0.0);
}

TEST(Bench, TotalEventsScaleWithTheRequest) {
  const BenchReport small = bench_encrypt(32, 24, 1000, 2);
  const BenchReport big = bench_encrypt(32, 24, 2000, 2);
  EXPECT_GE(big.total_events, small.total_events);
}

}  // namespace
