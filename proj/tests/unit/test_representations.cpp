#include "doctest.h"

#include <cmath>

#include "evdet/error.hpp"
#include "evdet/representations.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace evdet;

namespace {

EventWindow window(std::vector<Event> events, SensorGeometry g = {16, 12}, std::uint64_t start = 0,
                   std::uint64_t duration = 10'000) {
  EventWindow w;
  w.start_us = start;
  w.duration_us = duration;
  w.geometry = g;
  w.events = std::move(events);
  return w;
}

bool all_zero(const RepFrame& r) {
  return std::all_of(r.values.begin(), r.values.end(), [](double v) { return v == 0.0; });
}

}  // namespace

TEST_CASE("empty windows give zero frames of the right shape") {
  const auto w = window({});
  RepConfig cfg;
  LeakyState leaky({16, 12});
  for (RepKind k : {RepKind::histogram, RepKind::last_polarity, RepKind::decay, RepKind::frequency, RepKind::leaky,
                    RepKind::fused}) {
    const auto r = build_representation(k, w, cfg, &leaky);
    CHECK(r.channels == rep_channels(k));
    CHECK(r.height == 12);
    CHECK(r.width == 16);
    CHECK(r.values.size() == r.channels * 12 * 16);
    CHECK(all_zero(r));
  }
  CHECK(std::all_of(leaky.value.begin(), leaky.value.end(), [](double v) { return v == 0; }));
  CHECK(std::all_of(leaky.last_update_us.begin(), leaky.last_update_us.end(), [](auto t) { return t == 0; }));
}

TEST_CASE("histogram counts") {
  const auto r = build_histogram(window({{1, 5, 5, 1}, {2, 5, 5, -1}, {3, 5, 5, 1}}));
  CHECK(r.at(0, 5, 5) == 2);
  CHECK(r.at(1, 5, 5) == 1);
  double sum = 0;
  for (double v : r.values) sum += v;
  CHECK(sum == 3);
}

TEST_CASE("last polarity: later event wins") {
  const auto r = build_last_polarity(window({{100, 3, 4, 1}, {200, 3, 4, -1}}));
  CHECK(r.at(0, 4, 3) == -1);
  const auto tie = build_last_polarity(window({{100, 3, 4, -1}, {100, 3, 4, 1}}));
  CHECK(tie.at(0, 4, 3) == 1);
}

TEST_CASE("decay surface") {
  RepConfig cfg;
  cfg.tau_decay_us = 10'000;
  CHECK(build_decay_surface(window({{10'000, 0, 0, 1}}, {4, 4}, 0, 10'001), cfg).at(0, 0, 0) ==
        doctest::Approx(std::exp(-1.0 / 10'000)));
  const auto at_end = build_decay_surface(window({{9'999, 1, 1, 1}}, {4, 4}, 0, 9'999), cfg);
  CHECK(at_end.at(0, 1, 1) == 1.0);
  const auto one_tau = build_decay_surface(window({{0, 2, 2, 1}}, {4, 4}, 0, 10'000), cfg);
  CHECK(std::abs(one_tau.at(0, 2, 2) - 0.367879) <= 1e-6);
  const auto neg = build_decay_surface(window({{5'000, 2, 2, -1}}, {4, 4}, 0, 10'000), cfg);
  CHECK(neg.at(0, 2, 2) == doctest::Approx(-std::exp(-0.5)));
}

TEST_CASE("frequency in events per second") {
  const auto r = build_frequency(window({{1, 0, 0, 1}, {2, 0, 0, -1}, {3, 0, 0, 1}}));
  CHECK(r.at(0, 0, 0) == doctest::Approx(300.0).epsilon(1e-12));
}

TEST_CASE("leaky surface") {
  RepConfig cfg;
  cfg.tau_leak_us = 100'000;

  SUBCASE("simultaneous events add without decay") {
    LeakyState s({4, 4});
    auto w = window({{500, 1, 1, 1}, {500, 1, 1, 1}}, {4, 4}, 0, 500);
    CHECK(build_leaky_surface(w, s, cfg).at(0, 1, 1) == 2.0);
  }
  SUBCASE("memory survives the window boundary") {
    LeakyState s({4, 4});
    build_leaky_surface(window({{0, 2, 3, 1}}, {4, 4}, 0, 50'000), s, cfg);
    const auto r = build_leaky_surface(window({}, {4, 4}, 50'000, 50'000), s, cfg);
    CHECK(std::abs(r.at(0, 3, 2) - 0.367879) <= 1e-6);
  }
  SUBCASE("out-of-order windows are rejected") {
    LeakyState s({4, 4});
    build_leaky_surface(window({{9'000, 0, 0, 1}}, {4, 4}, 0, 10'000), s, cfg);
    CHECK_THROWS_AS(build_leaky_surface(window({{5'000, 0, 0, 1}}, {4, 4}, 0, 10'000), s, cfg), Error);
  }
}

TEST_CASE("fused frame composition") {
  std::mt19937_64 rng(4);
  const auto w = testing::random_window(rng, {20, 10}, 150, 30'000, 10'000);
  RepConfig cfg;
  const auto fused = build_fused(w, cfg);
  const auto pol = build_last_polarity(w);
  const auto dec = build_decay_surface(w, cfg);
  const std::size_t n = fused.plane();
  CHECK(std::equal(pol.values.begin(), pol.values.end(), fused.values.begin()));
  CHECK(std::equal(dec.values.begin(), dec.values.end(), fused.values.begin() + n));
  double peak = 0;
  for (std::size_t i = 2 * n; i < 3 * n; ++i) peak = std::max(peak, fused.values[i]);
  CHECK(peak == 1.0);

  cfg.normalization = Normalization::maxabs;
  for (double v : build_fused(w, cfg).values) CHECK(std::abs(v) <= 1.0);
}

TEST_CASE("normalize") {
  RepFrame r(1, SensorGeometry{3, 1}, {"c"});
  r.values = {0, 2, -4};
  CHECK(normalize(r, Normalization::maxabs).values == std::vector<double>{0, 0.5, -1});
  CHECK(normalize(r, Normalization::none).values == r.values);
  const auto l = normalize(r, Normalization::log1p).values;
  CHECK(l[1] == doctest::Approx(std::log(3.0)));
  CHECK(l[2] == doctest::Approx(-std::log(5.0)));
  RepFrame z(2, SensorGeometry{3, 3}, {"a", "b"});
  CHECK(all_zero(normalize(z, Normalization::maxabs)));
}

TEST_CASE("builders agree with brute-force scans") {
  std::mt19937_64 rng(21);
  RepConfig cfg;
  cfg.tau_decay_us = 3'000;
  cfg.tau_leak_us = 20'000;
  std::vector<EventWindow> history;
  LeakyState leaky({9, 7});
  for (int i = 0; i < 60; ++i) {
    auto w = testing::random_window(rng, {9, 7}, rng() % 120, i * 10'000ull, 10'000);
    history.push_back(w);
    CHECK(build_histogram(w).values == oracle::histogram(w));
    CHECK(build_last_polarity(w).values == oracle::last_polarity(w));
    CHECK(build_decay_surface(w, cfg).values == oracle::decay(w, cfg.tau_decay_us));
    CHECK(build_frequency(w).values == oracle::frequency(w));
    const auto got = build_leaky_surface(w, leaky, cfg).values;
    std::vector<double> scale;
    const auto want = oracle::leaky(history, history.size() - 1, cfg.tau_leak_us, &scale);
    for (std::size_t p = 0; p < got.size(); ++p) CHECK(std::abs(got[p] - want[p]) <= 1e-12 * std::max(1.0, scale[p]));
  }
}

TEST_CASE("REPF round trip and preview") {
  std::mt19937_64 rng(8);
  const auto w = testing::random_window(rng, {11, 5}, 40, 0, 10'000);
  for (RepKind k : {RepKind::histogram, RepKind::fused}) {
    const auto r = build_representation(k, w, {}, nullptr);
    const auto back = parse_repf(write_repf(r));
    CHECK(back.channels == r.channels);
    CHECK(back.height == 5);
    CHECK(back.width == 11);
    for (std::size_t i = 0; i < r.values.size(); ++i) CHECK(back.values[i] == static_cast<float>(r.values[i]));
    const std::string preview = write_preview(r);
    CHECK(preview.substr(0, 2) == (r.channels == 3 ? "P6" : "P5"));
  }
  CHECK_THROWS_AS(parse_repf("REPF\1\0"), ParseError);
}

TEST_CASE("name parsing") {
  CHECK(parse_rep_kind("polarity") == RepKind::last_polarity);
  CHECK(rep_kind_name(RepKind::fused) == "fused");
  CHECK_THROWS_AS(parse_rep_kind("voxel"), Error);
  CHECK_THROWS_AS(parse_normalization("zscore"), Error);
}
