// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "evdet/async_engine.hpp"
#include "evdet/cli.hpp"
#include "evdet/detector.hpp"
#include "evdet/dvs_sim.hpp"
#include "evdet/engine.hpp"
#include "evdet/eval.hpp"
#include "evdet/io_util.hpp"
#include "evdet/pipeline.hpp"
#include "evdet/representations.hpp"
#include "evdet/synthetic.hpp"
#include "nets.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace evdet;
using clock_type = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

double elapsed(clock_type::time_point t0) { return std::chrono::duration<double>(clock_type::now() - t0).count(); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

float max_abs_diff(const Tensor& a, const Tensor& b) {
  float d = 0;
  for (std::size_t i = 0; i < a.data().size(); ++i) d = std::max(d, std::abs(a.data()[i] - b.data()[i]));
  return d;
}

// 1. Sparse/dense equivalence ------------------------------------------------

Outcome sparse_dense_equivalence() {
  std::mt19937_64 rng(1001);
  const auto t0 = clock_type::now();
  float worst = 0;
  std::size_t bg_mismatch = 0, cases = 0;
  for (int i = 0; i < 1000; ++i, ++cases) {
    const Network net(testing::random_spec(rng));
    const double density = i % 10 == 0 ? (i % 20 == 0 ? 0.0 : 1.0) : std::uniform_real_distribution<>(0, 1)(rng);
    const Tensor x = testing::random_input(rng, net.input_shape(), density);
    const auto sparse = sparse_forward(net, to_sparse(x));
    const Tensor dense = dense_forward(net, x).output;
    const Tensor got = sparse.output.to_dense();
    const Tensor& bg = *net.background(net.depth());
    const Shape& os = net.output_shape();
    std::vector<bool> computed(os.sites(), false);
    for (Site s : sparse.output.sites) computed[static_cast<std::size_t>(s.y) * os.w + s.x] = true;
    for (int y = 0; y < os.h; ++y)
      for (int xx = 0; xx < os.w; ++xx) {
        const bool c = computed[static_cast<std::size_t>(y) * os.w + xx];
        for (int ch = 0; ch < os.c; ++ch) {
          if (c) {
            worst = std::max(worst, std::abs(got.at(ch, y, xx) - dense.at(ch, y, xx)));
          } else if (got.at(ch, y, xx) != bg.at(ch, y, xx) ||
                     std::abs(dense.at(ch, y, xx) - bg.at(ch, y, xx)) > 1e-5f) {
            ++bg_mismatch;
          }
        }
      }
  }
  const double secs = elapsed(t0);
  Outcome o;
  o.pass = worst <= 1e-5f && bg_mismatch == 0 && secs <= 120;
  o.detail = std::to_string(cases) + " cases, max |sparse-dense| = " + fmt("%.3g", worst) +
             ", background mismatches = " + std::to_string(bg_mismatch) + ", " + fmt("%.1f", secs) + " s";
  return o;
}

// 2. Async/dense equivalence -------------------------------------------------

Outcome async_dense_equivalence() {
  std::mt19937_64 rng(2002);
  const auto t0 = clock_type::now();
  float worst = 0;
  std::uniform_real_distribution<float> v(-1.0f, 1.0f);
  for (int n = 0; n < 100; ++n) {
    auto net = std::make_shared<const Network>(testing::random_spec(rng));
    Tensor cur = testing::random_input(rng, net->input_shape(), std::uniform_real_distribution<>(0, 1)(rng));
    AsyncState st = async_init(net, cur);
    const Shape& s = net->input_shape();
    for (int k = 0; k < 50; ++k) {
      SiteDelta d{{static_cast<int>(rng() % s.h), static_cast<int>(rng() % s.w)}, std::vector<float>(s.c)};
      for (auto& x : d.values) x = v(rng);
      std::copy(d.values.begin(), d.values.end(), cur.site(d.site.y, d.site.x));
      async_update(st, std::span(&d, 1));
      worst = std::max(worst, max_abs_diff(st.activations.back(), dense_forward(*net, cur).output));
    }
  }
  const double secs = elapsed(t0);
  return {worst <= 1e-4f && secs <= 300,
          "100 nets x 50 deltas, max |async-dense| = " + fmt("%.3g", worst) + ", " + fmt("%.1f", secs) + " s"};
}

// 3. FLOP exactness ----------------------------------------------------------

bool conv_flops_exact(const NetworkSpec& spec) {
  // Independent shape walk: same-padded conv, floor division.
  int c = spec.input.c, h = spec.input.h, w = spec.input.w;
  std::uint64_t want = 0;
  const auto rep = analytic_flops(spec);
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& l = spec.layers[i];
    if (l.kind == LayerKind::relu) continue;
    const int pad = l.kind == LayerKind::conv ? l.k / 2 : 0;
    h = (h + 2 * pad - l.k) / l.stride + 1;
    w = (w + 2 * pad - l.k) / l.stride + 1;
    if (l.kind == LayerKind::conv) {
      const std::uint64_t layer = 2ull * l.k * l.k * c * l.cout * h * w;
      if (rep.layers[i].dense != layer) return false;
      want += layer;
      c = l.cout;
    }
  }
  return rep.conv_dense() == want;
}

Outcome flop_exactness() {
  std::size_t checked = 0, bad = 0;
  for (const char* name : {"vgg16-yolo", "vgg16-yolo-ext"}) {
    for (auto [h, w, base] : {std::tuple{144, 256, 16}, std::tuple{288, 512, 16}, std::tuple{64, 64, 8},
                              std::tuple{720, 1280, 32}}) {
      PresetOptions o;
      o.height = h;
      o.width = w;
      o.base_width = base;
      ++checked;
      bad += !conv_flops_exact(make_preset(name, o));
    }
  }
  std::mt19937_64 rng(3003);
  for (int i = 0; i < 100; ++i, ++checked) bad += !conv_flops_exact(testing::random_spec(rng, {1, 8, 96, 16}));
  PresetOptions o;
  const auto vgg = analytic_flops(make_preset("vgg16-yolo", o));
  return {bad == 0, std::to_string(checked) + " specs checked, " + std::to_string(bad) +
                        " mismatches; vgg16-yolo@256x144 dense conv FLOPs = " + std::to_string(vgg.conv_dense())};
}

// 4. Sparse cost reduction ---------------------------------------------------

Outcome sparse_cost_reduction() {
  PresetOptions po;  // 2 x 144 x 256, base width 16
  NetworkSpec spec = make_preset("vgg16-yolo", po);
  init_weights(spec, 4004);
  const Network net(spec);
  const SensorGeometry g{256, 144};

  std::uint64_t dense = 0, executed = 0;
  std::size_t windows = 0;
  double max_active = 0;
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    SceneConfig cfg;
    cfg.seed = seed;
    cfg.rect_count = 1 + seed % 2;
    cfg.duration_us = 100'000;
    const auto scene = gen_synthetic_scene(cfg);
    for (const auto& w : slice_windows(scene.stream, 10'000, 10'000, cfg.duration_us)) {
      const RepFrame r = build_histogram(w);
      const Tensor x = Tensor::from_planar(net.input_shape(), r.values);
      const SparseTensor s = to_sparse(x);
      const double active = static_cast<double>(s.sites.size()) / g.pixels();
      if (active > 0.01 || s.sites.empty()) continue;
      max_active = std::max(max_active, active);
      const auto f = sparse_forward(net, s).flops;
      dense += f.conv_dense();
      executed += f.conv_executed();
      ++windows;
    }
  }
  const double ratio = dense ? static_cast<double>(executed) / dense : 1.0;

  // Floor for any non-empty window: one active pixel in the middle of the sensor.
  Tensor one(net.input_shape());
  one.at(0, 72, 128) = 1.0f;
  const auto single = sparse_forward(net, to_sparse(one)).flops;

  // Monotonicity and the full-density limit.
  bool monotone = true;
  std::uint64_t prev = 0;
  std::mt19937_64 rng(4005);
  for (double d : {0.0, 0.001, 0.01, 0.05, 0.2, 1.0}) {
    Tensor x(net.input_shape());
    if (d == 1.0) {
      for (float& v : x.data()) v = 1.0f;
    } else {
      x = testing::random_input(rng, net.input_shape(), d);
    }
    const auto f = sparse_forward(net, to_sparse(x)).flops;
    monotone = monotone && f.conv_executed() <= f.conv_dense() && f.executed_total() >= prev;
    prev = f.executed_total();
    if (d == 1.0) monotone = monotone && f.executed_total() == f.dense_total();
  }

  Outcome o;
  o.pass = windows > 0 && ratio <= 0.05 && monotone;
  o.detail = std::to_string(windows) + " windows (max " + fmt("%.2f", 100 * max_active) +
             "% active), executed/dense conv FLOPs = " + fmt("%.4f", ratio) + " (target <= 0.05); single-pixel floor = " +
             fmt("%.4f", single.conv_ratio()) + "; monotone/full-density " + (monotone ? "ok" : "VIOLATED");
  return o;
}

// 5. Representation oracles --------------------------------------------------

Outcome representation_oracles() {
  std::mt19937_64 rng(5005);
  RepConfig cfg;
  std::size_t windows = 0, mismatches = 0;
  double worst_rel = 0;
  for (int seq = 0; seq < 1000; ++seq) {
    const SensorGeometry g{1 + static_cast<std::uint32_t>(rng() % 16), 1 + static_cast<std::uint32_t>(rng() % 16)};
    cfg.tau_decay_us = 500 + rng() % 20'000;
    cfg.tau_leak_us = 1'000 + rng() % 100'000;
    const std::uint64_t dur = 1'000 + rng() % 20'000;
    LeakyState leaky(g);
    std::vector<EventWindow> history;
    for (int k = 0; k < 10; ++k, ++windows) {
      const auto w = testing::random_window(rng, g, rng() % 120, k * dur, dur);
      history.push_back(w);
      mismatches += build_histogram(w).values != oracle::histogram(w);
      mismatches += build_last_polarity(w).values != oracle::last_polarity(w);
      mismatches += build_frequency(w).values != oracle::frequency(w);
      const auto dec = build_decay_surface(w, cfg).values;
      const auto dec_ref = oracle::decay(w, cfg.tau_decay_us);
      const auto fused = build_fused(w, cfg).values;
      const std::size_t n = g.pixels();
      mismatches += !std::equal(fused.begin(), fused.begin() + n, oracle::last_polarity(w).begin());
      mismatches += !std::equal(fused.begin() + n, fused.begin() + 2 * n, dec.begin());
      std::vector<double> scale;
      const auto leak = build_leaky_surface(w, leaky, cfg).values;
      const auto leak_ref = oracle::leaky(history, history.size() - 1, cfg.tau_leak_us, &scale);
      for (std::size_t p = 0; p < n; ++p) {
        if (dec_ref[p] != 0) worst_rel = std::max(worst_rel, std::abs(dec[p] - dec_ref[p]) / std::abs(dec_ref[p]));
        else if (dec[p] != 0) ++mismatches;
        worst_rel = std::max(worst_rel, std::abs(leak[p] - leak_ref[p]) / std::max(scale[p], 1e-300));
      }
    }
  }
  EventWindow w;
  w.geometry = {4, 4};
  w.events = {{0, 1, 1, 1}};
  RepConfig one_tau;
  one_tau.tau_decay_us = 10'000;
  const double e1 = build_decay_surface(w, one_tau).at(0, 1, 1);
  const bool example = std::abs(e1 - 0.367879) <= 1e-6;
  return {mismatches == 0 && worst_rel <= 1e-12 && example,
          std::to_string(windows) + " windows, exact mismatches = " + std::to_string(mismatches) +
              ", worst relative error = " + fmt("%.3g", worst_rel) + ", exp(-1) example = " + fmt("%.6f", e1)};
}

// 6. Metric oracles ----------------------------------------------------------

Outcome metric_oracles() {
  std::string notes;
  bool ok = true;
  auto check = [&](bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      notes += " [" + what + "]";
    }
  };
  const SensorGeometry g{100, 100};
  const BBox a = BBox::from_pixel_corners(0, 0, 10, 10, g), b = BBox::from_pixel_corners(5, 0, 15, 10, g);
  check(std::abs(iou(a, a) - 1.0) <= 1e-6, "iou identical");
  check(std::abs(iou(a, BBox::from_pixel_corners(50, 50, 60, 60, g))) <= 1e-6, "iou disjoint");
  check(std::abs(iou(a, b) - 1.0 / 3.0) <= 1e-6, "iou 1/3");

  GroundTruth two;
  two.windows[0] = {{{0.25, 0.25, 0.1, 0.1}, 0}, {{0.75, 0.75, 0.1, 0.1}, 0}};
  const double ap = average_precision({{0, {{two.windows[0][0].box, 0, 0.9}, {{0.5, 0.5, 0.05, 0.05}, 0, 0.8}}}},
                                      two, 0, 0.5)
                        .ap;
  check(std::abs(ap - 51.0 / 101.0) <= 1e-6, "AP 51/101");

  SceneConfig cfg;
  cfg.seed = 6006;
  cfg.rect_count = 3;
  cfg.duration_us = 200'000;
  const auto scene = gen_synthetic_scene(cfg);
  const GroundTruth gt = ground_truth_from(scene.ground_truth, cfg.geometry);
  std::vector<WindowDetections> self;
  for (const auto& [start, objs] : gt.windows) {
    WindowDetections w{start, {}};
    for (const auto& o : objs) w.detections.push_back({o.box, o.class_id, 1.0});
    self.push_back(w);
  }
  const auto perfect = map_metrics(self, gt);
  check(perfect.map50 == 1.0 && perfect.map5095 == 1.0, "GT as predictions");

  std::mt19937_64 rng(6007);
  std::normal_distribution<double> jitter(0.0, 0.03);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::size_t violations = 0;
  for (int t = 0; t < 100; ++t) {
    std::vector<WindowDetections> preds;
    for (const auto& [start, objs] : gt.windows) {
      WindowDetections w{start, {}};
      for (const auto& o : objs) {
        if (u(rng) < 0.25) continue;
        BBox bx = o.box;
        bx.cx += jitter(rng) * bx.w * 3;
        bx.cy += jitter(rng) * bx.h * 3;
        bx.w *= std::exp(jitter(rng));
        bx.h *= std::exp(jitter(rng));
        w.detections.push_back({bx, 0, u(rng)});
      }
      while (u(rng) < 0.3) w.detections.push_back({{u(rng), u(rng), 0.02 + 0.1 * u(rng), 0.05 + 0.2 * u(rng)}, 0, u(rng)});
      preds.push_back(w);
    }
    const auto r = map_metrics(preds, gt);
    violations += r.map5095 > r.map50;
  }
  check(violations == 0, std::to_string(violations) + " ladder violations");
  return {ok, "iou " + fmt("%.6f", iou(a, b)) + ", AP hand case " + fmt("%.6f", ap) + ", GT self-match " +
                  fmt("%.1f", perfect.map50) + "/" + fmt("%.1f", perfect.map5095) +
                  ", mAP@.5:.95 <= mAP@0.5 on 100 random sets" + notes};
}

// 7. End-to-end determinism --------------------------------------------------

int cli(std::vector<std::string> args, std::string* err = nullptr) {
  args.insert(args.begin(), "evdet");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, e;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, e);
  if (err) *err = e.str();
  return code;
}

Outcome end_to_end() {
  testing::TempDir dir("acceptance");
  auto run_once = [&](const std::string& tag, std::string* err) {
    const std::string root = dir / tag;
    return cli({"gen", "--seed", "7007", "--rects", "2", "--duration-ms", "200", "--out", root + "/scene"}, err) == 0 &&
           cli({"rep", "--input", root + "/scene/events.evs", "--kind", "histogram", "--out", root + "/rep"}, err) ==
               0 &&
           cli({"infer", "--input", root + "/scene/events.evs", "--mode", "dense", "--seed", "7008", "--conf", "0.2",
                "--out", root + "/dense"},
               err) == 0 &&
           cli({"infer", "--input", root + "/scene/events.evs", "--mode", "sparse", "--seed", "7008", "--conf", "0.2",
                "--out", root + "/sparse"},
               err) == 0 &&
           cli({"eval", "--dets", root + "/dense/detections.csv", "--gt", root + "/scene/gt.csv", "--out",
                root + "/eval"},
               err) == 0;
  };
  std::string err;
  if (!run_once("a", &err) || !run_once("b", &err)) return {false, "CLI failed: " + err};

  std::size_t differing = 0, compared = 0;
  for (const char* f : {"scene/events.evs", "scene/gt.csv", "rep/window_000000.repf", "rep/window_000019.repf",
                        "dense/detections.csv", "dense/flops.csv", "eval/eval.csv"}) {
    ++compared;
    differing += io::read_file(dir / (std::string("a/") + f)) != io::read_file(dir / (std::string("b/") + f));
  }

  const auto dense = parse_detections_csv(io::read_file(dir / "a/dense/detections.csv"));
  const auto sparse = parse_detections_csv(io::read_file(dir / "a/sparse/detections.csv"));
  double worst = 0;
  std::size_t n = 0;
  bool same_shape = dense.size() == sparse.size();
  for (std::size_t w = 0; same_shape && w < dense.size(); ++w) {
    same_shape = dense[w].detections.size() == sparse[w].detections.size();
    for (std::size_t i = 0; same_shape && i < dense[w].detections.size(); ++i, ++n) {
      worst = std::max(worst, std::abs(dense[w].detections[i].score - sparse[w].detections[i].score));
    }
  }
  return {differing == 0 && same_shape && worst <= 1e-4 && n > 0,
          std::to_string(compared - differing) + "/" + std::to_string(compared) +
              " artefacts byte-identical across runs; " + std::to_string(n) +
              " sparse detections, max score deviation from dense = " + fmt("%.3g", worst)};
}

// 8. DVS simulator -----------------------------------------------------------

Outcome dvs_cases() {
  const double eps = 1e-3;
  std::vector<LuminanceFrame> flat;
  for (int i = 0; i < 20; ++i) flat.push_back({static_cast<std::uint64_t>(i) * 1000, 16, 8, std::vector<double>(128, 0.4)});
  const std::size_t constant = simulate_dvs(flat, {0.2, eps}).events.size();

  std::size_t bad_pixels = 0, affected = 0;
  for (double sign : {1.0, -1.0}) {
    LuminanceFrame f0{0, 16, 8, std::vector<double>(128, 0.4)};
    LuminanceFrame f1 = f0;
    f1.t_us = 1000;
    std::vector<int> count(128, 0);
    for (int p = 0; p < 128; p += 3) {
      f1.luminance[p] = (0.4 + eps) * std::exp(sign * 0.45) - eps;
      ++affected;
    }
    for (const auto& e : simulate_dvs({f0, f1}, {0.2, eps}).events) {
      count[e.y * 16 + e.x] += (e.p == (sign > 0 ? 1 : -1)) ? 1 : 100;
    }
    for (int p = 0; p < 128; ++p) bad_pixels += count[p] != (p % 3 == 0 ? 2 : 0);
  }
  return {constant == 0 && bad_pixels == 0,
          "constant video -> " + std::to_string(constant) + " events; +-0.45 step on " + std::to_string(affected) +
              " pixels -> " + std::to_string(bad_pixels) + " pixels without exactly 2 correct-polarity events"};
}

// 9. Throughput --------------------------------------------------------------

Outcome throughput() {
  std::mt19937_64 rng(9009);
  const auto stream = testing::random_stream(rng, {1280, 720}, 4'000'000, 2'000'000);
  const std::string bytes = write_stream(stream, StreamFormat::binary_evs);
  const auto t0 = clock_type::now();
  const auto parsed = parse_stream(bytes, StreamFormat::binary_evs);
  const double t_parse = elapsed(t0);
  const auto t1 = clock_type::now();
  const auto windows = slice_windows(parsed, 10'000, 10'000);
  const double t_slice = elapsed(t1);
  const double rate = parsed.events.size() / (t_parse + t_slice);

  std::string csv = "stage,events_or_windows,seconds,rate\n";
  csv += "parse," + std::to_string(parsed.events.size()) + "," + io::fixed(t_parse, 6) + "," +
         io::fixed(parsed.events.size() / t_parse, 1) + "\n";
  csv += "slice," + std::to_string(parsed.events.size()) + "," + io::fixed(t_slice, 6) + "," +
         io::fixed(parsed.events.size() / t_slice, 1) + "\n";
  csv += "parse+slice," + std::to_string(parsed.events.size()) + "," + io::fixed(t_parse + t_slice, 6) + "," +
         io::fixed(rate, 1) + "\n";
  io::write_file("acceptance_bench.csv", csv);
  return {rate >= 1e6, fmt("%.3g", rate) + " events/s over " + std::to_string(parsed.events.size()) + " events, " +
                           std::to_string(windows.size()) + " windows (informational; written to acceptance_bench.csv)"};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"sparse/dense equivalence", sparse_dense_equivalence},
      {"async/dense equivalence", async_dense_equivalence},
      {"FLOP exactness", flop_exactness},
      {"sparse cost reduction", sparse_cost_reduction},
      {"representation oracles", representation_oracles},
      {"metric oracles", metric_oracles},
      {"end-to-end determinism", end_to_end},
      {"DVS simulator", dvs_cases},
      {"throughput", throughput},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << " (" << criteria[i].first
              << "): " << o.detail << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed ? 1 : 0;
}
