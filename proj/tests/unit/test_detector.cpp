#include "doctest.h"

#include <cmath>
#include <random>

#include "evdet/detector.hpp"
#include "evdet/error.hpp"
#include "evdet/pipeline.hpp"

using namespace evdet;

namespace {

YoloHeadSpec head(int gh, int gw, std::vector<std::pair<double, double>> anchors, int classes = 1) {
  YoloHeadSpec h;
  h.grid_h = gh;
  h.grid_w = gw;
  h.anchors = std::move(anchors);
  h.num_classes = classes;
  return h;
}

Detection det(double cx, double cy, double w, double h, double score, int cls = 0) {
  return {{cx, cy, w, h}, cls, score};
}

}  // namespace

TEST_CASE("iou") {
  const BBox a{0.5, 0.5, 0.2, 0.2};
  CHECK(iou(a, a) == 1.0);
  CHECK(iou(a, {0.1, 0.1, 0.1, 0.1}) == 0.0);
  const SensorGeometry g{100, 100};
  const BBox p = BBox::from_pixel_corners(0, 0, 10, 10, g);
  const BBox q = BBox::from_pixel_corners(5, 0, 15, 10, g);
  CHECK(std::abs(iou(p, q) - 1.0 / 3.0) < 1e-6);

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.05, 0.95), s(0.01, 0.4);
  for (int i = 0; i < 1000; ++i) {
    const BBox x{u(rng), u(rng), s(rng), s(rng)}, y{u(rng), u(rng), s(rng), s(rng)};
    const double v = iou(x, y);
    CHECK(v == iou(y, x));
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("pixel box conversions") {
  const SensorGeometry g{256, 144};
  const PixelBox pb{10, 20, 30, 40};
  const BBox b = BBox::from_pixel_box(pb, g);
  CHECK(b.cx == doctest::Approx(25.0 / 256));
  CHECK(b.h == doctest::Approx(40.0 / 144));
  const PixelBox back = b.to_pixel_box(g);
  CHECK(back.x == doctest::Approx(10));
  CHECK(back.w == doctest::Approx(30));
  CHECK(is_valid(b));
  CHECK_FALSE(is_valid({0.5, 0.5, 0.0, 0.1}));
  CHECK_FALSE(is_valid({2.0, 2.0, 0.1, 0.1}));
}

TEST_CASE("decode_yolo") {
  SUBCASE("zero logits score 0.25") {
    const auto h = head(4, 4, {{0.2, 0.2}});
    const Tensor raw({h.channels(), 4, 4});
    CHECK(decode_yolo(raw, h, 0.6).empty());
    const auto all = decode_yolo(raw, h, 0.2);
    REQUIRE(all.size() == 16);
    CHECK(all[0].score == doctest::Approx(0.25));
    CHECK(all[0].box.cx == doctest::Approx(0.125));
    CHECK(all[0].box.w == doctest::Approx(0.2));
  }
  SUBCASE("saturated logits at cell (0,0)") {
    const auto h = head(4, 4, {{0.25, 0.25}});
    Tensor raw({h.channels(), 4, 4});
    raw.at(0, 0, 0) = 30;
    raw.at(1, 0, 0) = 30;
    raw.at(4, 0, 0) = 30;
    raw.at(5, 0, 0) = 30;
    const auto d = decode_yolo(raw, h, 0.5);
    REQUIRE(d.size() == 1);
    CHECK(d[0].box.cx == doctest::Approx(0.25).epsilon(1e-6));
    CHECK(d[0].box.cx <= 0.25);
    CHECK(d[0].box.cy == doctest::Approx(0.25).epsilon(1e-6));
    CHECK(d[0].box.w == doctest::Approx(0.25));
    CHECK(d[0].score == doctest::Approx(1.0).epsilon(1e-9));
  }
  SUBCASE("threshold 1 is always empty") {
    const auto h = head(2, 3, {{0.1, 0.1}, {0.3, 0.2}}, 2);
    Tensor raw({h.channels(), 2, 3}, 50.0f);
    CHECK(decode_yolo(raw, h, 1.0).empty());
  }
  SUBCASE("best class wins and sizes are clamped") {
    const auto h = head(1, 1, {{0.5, 0.5}}, 3);
    Tensor raw({h.channels(), 1, 1});
    raw.at(2, 0, 0) = 5;  // tw
    raw.at(4, 0, 0) = 10;
    raw.at(7, 0, 0) = 4;  // class 2
    const auto d = decode_yolo(raw, h, 0.1);
    REQUIRE(d.size() == 1);
    CHECK(d[0].class_id == 2);
    CHECK(d[0].box.w == 1.0);
  }
  SUBCASE("shape mismatch") {
    const auto h = head(4, 4, {{0.2, 0.2}});
    CHECK_THROWS_AS(decode_yolo(Tensor({6, 4, 5}), h, 0.5), ShapeError);
    CHECK_THROWS_AS(decode_yolo(Tensor({7, 4, 4}), h, 0.5), ShapeError);
  }
}

TEST_CASE("nms") {
  CHECK(nms({}, 0.5).empty());
  const auto one = nms({det(0.5, 0.5, 0.2, 0.2, 0.8), det(0.5, 0.5, 0.2, 0.2, 0.9)}, 0.5);
  REQUIRE(one.size() == 1);
  CHECK(one[0].score == 0.9);
  CHECK(nms({det(0.2, 0.2, 0.1, 0.1, 0.5), det(0.8, 0.8, 0.1, 0.1, 0.6)}, 0.5).size() == 2);
  CHECK(nms({det(0.5, 0.5, 0.2, 0.2, 0.8, 0), det(0.5, 0.5, 0.2, 0.2, 0.9, 1)}, 0.5).size() == 2);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.1, 0.9), s(0.05, 0.3), sc(0.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    std::vector<Detection> in;
    for (int i = 0; i < 30; ++i) in.push_back(det(u(rng), u(rng), s(rng), s(rng), sc(rng), rng() % 2));
    const double thr = 0.2 + 0.6 * sc(rng);
    const auto out = nms(in, thr);
    CHECK(out.size() <= in.size());
    for (std::size_t i = 1; i < out.size(); ++i) CHECK(out[i - 1].score >= out[i].score);
    for (std::size_t i = 0; i < out.size(); ++i)
      for (std::size_t j = i + 1; j < out.size(); ++j)
        if (out[i].class_id == out[j].class_id) CHECK(iou(out[i].box, out[j].box) <= thr);
    CHECK(nms(out, thr).size() == out.size());
    // The top-scoring box always survives.
    const auto top = std::max_element(in.begin(), in.end(), [](auto& a, auto& b) { return a.score < b.score; });
    CHECK(out[0].score == top->score);
  }
}

TEST_CASE("detections CSV round trip") {
  std::vector<WindowDetections> w{{0, {det(0.5, 0.25, 0.125, 0.5, 0.75)}}, {10'000, {}},
                                  {20'000, {det(0.1, 0.2, 0.3, 0.4, 0.5, 2), det(0.6, 0.7, 0.1, 0.1, 0.25)}}};
  const std::string csv = write_detections_csv(w);
  CHECK(csv.find("window_start_us,class_id,score,cx,cy,w,h\n0,0,0.750000,0.500000,0.250000,0.125000,0.500000\n") ==
        0);
  const auto back = parse_detections_csv(csv);
  CHECK(write_detections_csv(back) == csv);
  CHECK_THROWS_AS(parse_detections_csv("window_start_us,class_id,score,cx,cy,w,h\n0,0,1.5,0,0,0,0\n"), ParseError);
  CHECK_THROWS_AS(parse_detections_csv("a,b\n"), ParseError);
}

TEST_CASE("pipeline") {
  PresetOptions po;
  po.height = 64;
  po.width = 64;
  po.base_width = 4;
  NetworkSpec spec = make_preset("vgg16-yolo", po);
  init_weights(spec, 1);
  auto net = std::make_shared<const Network>(spec);
  PipelineConfig cfg;
  cfg.head = head_for(*net, {{0.05, 0.15}, {0.1, 0.3}, {0.2, 0.5}}, 1);
  CHECK(cfg.head.grid_h == 2);
  CHECK(cfg.head.grid_w == 2);

  EventWindow empty;
  empty.geometry = {64, 64};
  SUBCASE("empty window, zero biases") {
    cfg.mode = ExecMode::sparse;
    const auto r = run_pipeline(empty, net, cfg);
    CHECK(r.detections.empty());
    CHECK(r.flops.executed_total() == 0);
  }
  SUBCASE("modes agree") {
    std::mt19937_64 rng(5);
    std::vector<EventWindow> windows;
    for (int i = 0; i < 4; ++i) {
      EventWindow w;
      w.start_us = i * 10'000ull;
      w.geometry = {64, 64};
      for (int k = 0; k < 40; ++k)
        w.events.push_back({w.start_us + k, static_cast<std::uint16_t>(rng() % 64),
                            static_cast<std::uint16_t>(rng() % 64), static_cast<std::int8_t>(k % 2 ? 1 : -1)});
      windows.push_back(w);
    }
    cfg.conf_threshold = 0.2;
    std::vector<std::vector<Detection>> by_mode[3];
    for (ExecMode m : {ExecMode::dense, ExecMode::sparse, ExecMode::async}) {
      cfg.mode = m;
      Pipeline p(net, cfg);
      for (const auto& w : windows) by_mode[static_cast<int>(m)].push_back(p.run(w).detections);
    }
    for (int m = 1; m < 3; ++m)
      for (std::size_t w = 0; w < windows.size(); ++w) {
        REQUIRE(by_mode[m][w].size() == by_mode[0][w].size());
        for (std::size_t i = 0; i < by_mode[0][w].size(); ++i)
          CHECK(std::abs(by_mode[m][w][i].score - by_mode[0][w][i].score) <= 1e-4);
      }
  }
  SUBCASE("configuration errors") {
    cfg.rep = RepKind::fused;
    CHECK_THROWS_AS(Pipeline(net, cfg), Error);
    cfg.rep = RepKind::histogram;
    cfg.head.grid_w = 3;
    CHECK_THROWS_AS(Pipeline(net, cfg), Error);
  }
}
