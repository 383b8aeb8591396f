// Copyright 2026 The SGFR Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "sgfr/error.hpp"
#include "sgfr/pipeline.hpp"
#include "sgfr/synthetic.hpp"

using namespace sgfr;

namespace {

ScoreGrid random_grid(std::mt19937_64& rng, std::uint32_t h, std::uint32_t w) {
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  ScoreGrid g(h, w);
  for (float& v : g.values) v = u(rng);
  return g;
}

// Index into [0, n) under reflection without repeating the edge sample.
long reflect(long i, long n) {
  if (n == 1) return 0;
  const long period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

// Direct 2-D convolution with the analytic Gaussian weights.
ScoreGrid blur_oracle(const ScoreGrid& g, double sigma) {
  const long r = static_cast<long>(std::ceil(4 * sigma));
  std::vector<double> k(2 * r + 1);
  double sum = 0.0;
  for (long t = -r; t <= r; ++t) sum += k[t + r] = std::exp(-0.5 * t * t / (sigma * sigma));
  for (double& v : k) v /= sum;
  ScoreGrid out(g.height, g.width);
  for (long y = 0; y < g.height; ++y) {
    for (long x = 0; x < g.width; ++x) {
      double acc = 0.0;
      for (long dy = -r; dy <= r; ++dy) {
        for (long dx = -r; dx <= r; ++dx) {
          acc += k[dy + r] * k[dx + r] * g.at(reflect(y + dy, g.height), reflect(x + dx, g.width));
        }
      }
      out.at(y, x) = static_cast<float>(acc);
    }
  }
  return out;
}

double block_mean(const ScoreGrid& g, const GroundTruthMask& mask, bool inside) {
  double sum = 0.0;
  double n = 0.0;
  for (std::size_t y = 0; y < g.height; ++y) {
    for (std::size_t x = 0; x < g.width; ++x) {
      if (mask.at(y, x) == inside) {
        sum += g.at(y, x);
        n += 1.0;
      }
    }
  }
  return sum / n;
}

SyntheticSpec small_spec() {
  SyntheticSpec spec;
  spec.levels = {{2, {8, 8, 4}}, {3, {4, 4, 8}}, {4, {2, 2, 16}}};
  spec.points_per_subspace = 8;
  spec.n_subspaces = 5;
  spec.n_test = 6;
  spec.block_height = 2;
  spec.block_width = 2;
  spec.output_height = 64;
  spec.output_width = 64;
  return spec;
}

PipelineConfig small_config() {
  PipelineConfig cfg;
  cfg.output_height = 64;
  cfg.output_width = 64;
  cfg.s_ref = 20;
  return cfg;
}

}  // namespace

TEST_CASE("residual_to_scores") {
  const TensorShape shape{2, 2, 3};
  const auto zero = residual_to_scores(std::vector<double>(12, 0.0), shape);
  CHECK(zero.values == std::vector<float>(4, 0.0f));

  std::vector<double> single(12, 0.0);
  single[flat_index(shape, 1, 0, 2)] = -2.5;
  const auto s = residual_to_scores(single, shape);
  CHECK(s.at(1, 0) == 2.5f);
  CHECK(s.at(0, 0) == 0.0f);

  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  std::vector<double> e(12);
  for (double& v : e) v = g(rng);
  const auto r = residual_to_scores(e, shape);
  for (std::size_t y = 0; y < 2; ++y) {
    for (std::size_t x = 0; x < 2; ++x) {
      double acc = 0.0;
      for (std::size_t c = 0; c < 3; ++c) acc += e[(y * 2 + x) * 3 + c] * e[(y * 2 + x) * 3 + c];
      CHECK(r.at(y, x) == doctest::Approx(std::sqrt(acc)).epsilon(1e-6));
    }
  }
  CHECK_THROWS_AS(residual_to_scores(std::vector<double>(5), shape), Error);
}

TEST_CASE("upsample_bilinear") {
  ScoreGrid constant(3, 5, 2.5f);
  const auto up = upsample_bilinear(constant, 17, 9);
  CHECK(up.height == 17);
  CHECK(up.width == 9);
  for (float v : up.values) CHECK(v == doctest::Approx(2.5f));

  const auto one = upsample_bilinear(ScoreGrid(1, 1, 7.0f), 4, 6);
  for (float v : one.values) CHECK(v == 7.0f);

  ScoreGrid two(2, 2);
  two.values = {0.0f, 1.0f, 1.0f, 2.0f};
  const auto three = upsample_bilinear(two, 3, 3);
  CHECK(three.at(1, 1) == doctest::Approx(1.0));
  CHECK(three.at(0, 0) == 0.0f);
  CHECK(three.at(2, 2) == 2.0f);
  CHECK(three.at(0, 1) == doctest::Approx(0.5));

  std::mt19937_64 rng(2);
  const auto g = random_grid(rng, 4, 3);
  const auto u = upsample_bilinear(g, 10, 7);
  for (std::size_t y = 0; y < 10; ++y) {
    for (std::size_t x = 0; x < 7; ++x) {
      const double sy = y * 3.0 / 9.0;
      const double sx = x * 2.0 / 6.0;
      const auto y0 = static_cast<std::size_t>(sy);
      const auto x0 = static_cast<std::size_t>(sx);
      const std::size_t y1 = std::min<std::size_t>(y0 + 1, 3);
      const std::size_t x1 = std::min<std::size_t>(x0 + 1, 2);
      const double fy = sy - y0;
      const double fx = sx - x0;
      const double v = (1 - fy) * ((1 - fx) * g.at(y0, x0) + fx * g.at(y0, x1)) +
                       fy * ((1 - fx) * g.at(y1, x0) + fx * g.at(y1, x1));
      CHECK(u.at(y, x) == doctest::Approx(v).epsilon(1e-6));
    }
  }
}

TEST_CASE("gaussian_smooth") {
  const auto k = gaussian_kernel(4.0);
  CHECK(k.size() == 33);
  double sum = 0.0;
  for (double v : k) sum += v;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));

  const auto flat = gaussian_smooth(ScoreGrid(40, 30, 3.0f), 4.0);
  for (float v : flat.values) CHECK(std::abs(v - 3.0f) <= 1e-6);

  ScoreGrid impulse(21, 21);
  impulse.at(10, 10) = 1.0f;
  const auto blurred = gaussian_smooth(impulse, 1.0);
  const auto k1 = gaussian_kernel(1.0);
  CHECK(k1.size() == 9);
  CHECK(blurred.at(10, 10) == doctest::Approx(k1[4] * k1[4]).epsilon(1e-6));

  std::mt19937_64 rng(3);
  for (double sigma : {0.7, 1.5, 4.0}) {
    const auto g = random_grid(rng, 13, 11);
    const auto a = gaussian_smooth(g, sigma);
    const auto b = blur_oracle(g, sigma);
    for (std::size_t i = 0; i < a.values.size(); ++i) {
      CHECK(a.values[i] == doctest::Approx(b.values[i]).epsilon(1e-5));
    }
  }
  CHECK_THROWS_AS(gaussian_smooth(impulse, 0.0), Error);
}

TEST_CASE("aggregate_levels") {
  const std::vector<ScoreGrid> one{ScoreGrid(2, 3, 1.5f)};
  CHECK(aggregate_levels(one, Aggregation::kMean) == one[0]);
  CHECK(aggregate_levels(one, Aggregation::kSum) == one[0]);
  const std::vector<ScoreGrid> pair{ScoreGrid(2, 3, 0.0f), ScoreGrid(2, 3, 2.0f)};
  CHECK(aggregate_levels(pair, Aggregation::kMean) == ScoreGrid(2, 3, 1.0f));
  std::mt19937_64 rng(4);
  const std::vector<ScoreGrid> three{random_grid(rng, 4, 4), random_grid(rng, 4, 4),
                                     random_grid(rng, 4, 4)};
  const auto mean = aggregate_levels(three, Aggregation::kMean);
  const auto sum = aggregate_levels(three, Aggregation::kSum);
  for (std::size_t i = 0; i < mean.values.size(); ++i) {
    CHECK(sum.values[i] == doctest::Approx(3 * mean.values[i]).epsilon(1e-6));
  }
  const std::vector<ScoreGrid> mismatched{ScoreGrid(2, 2), ScoreGrid(2, 3)};
  CHECK_THROWS_AS(aggregate_levels(mismatched, Aggregation::kMean), Error);
  CHECK_THROWS_AS(aggregate_levels(std::vector<ScoreGrid>{}, Aggregation::kMean), Error);
}

TEST_CASE("PipelineConfig validation and echo") {
  PipelineConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.to_json()["sigma"] == 4.0);
  CHECK(cfg.to_json()["s_ref"] == 40);
  CHECK(cfg.to_json()["s"] == 17);
  auto bad = cfg;
  bad.ref_level = 2;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = cfg;
  bad.sigma = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = cfg;
  bad.scoring_levels = {2, 2};
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = cfg;
  bad.sparsity = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
  CHECK(parse_aggregation("sum") == Aggregation::kSum);
  CHECK_THROWS_AS(parse_aggregation("max"), Error);
}

TEST_CASE("nominal samples reconstruct to near-zero scores") {
  const auto data = gen_synthetic(small_spec());
  const auto bank = data.bank();
  const auto cfg = small_config();
  for (std::size_t i = 0; i < data.nominal.size(); i += 7) {
    const auto map = score_sample(bank, data.nominal[i].features, cfg);
    CHECK(map.scores.max() <= 1e-4);
    CHECK(map.scores.height == 64);
  }
}

TEST_CASE("planted block lights up against a control run") {
  const auto data = gen_synthetic(small_spec());
  const auto bank = data.bank();
  const auto cfg = small_config();
  std::mt19937_64 rng(5);
  std::normal_distribution<float> g;
  // Copy nominal 3 and perturb level 2 inside cells [2, 6) x [4, 8).
  const auto& base = data.nominal[3].features;
  std::vector<std::uint8_t> mask_values(64 * 64, 0);
  for (std::size_t y = 16; y < 48; ++y) {
    for (std::size_t x = 32; x < 64; ++x) mask_values[y * 64 + x] = 1;
  }
  const GroundTruthMask mask(64, 64, mask_values);
  auto perturbed = [&](float scale) {
    SampleFeatures f = base;
    const auto& t = base.at(2);
    std::vector<float> v(t.data().begin(), t.data().end());
    std::mt19937_64 local(7);
    for (std::size_t y = 2; y < 6; ++y) {
      for (std::size_t x = 4; x < 8; ++x) {
        for (std::size_t c = 0; c < 4; ++c) v[flat_index(t.shape(), y, x, c)] += scale * 0.2f * g(local);
      }
    }
    f.erase(2);
    f.emplace(2, FeatureTensor(2, t.shape(), v));
    return f;
  };
  const auto control = score_sample(bank, base, cfg);
  const auto once = score_sample(bank, perturbed(1.0f), cfg);
  const auto twice = score_sample(bank, perturbed(2.0f), cfg);
  const double in1 = block_mean(once.scores, mask, true);
  const double out1 = block_mean(once.scores, mask, false);
  CHECK(in1 > out1);
  CHECK(in1 > block_mean(control.scores, mask, true));
  CHECK(block_mean(twice.scores, mask, true) >= in1);
}

TEST_CASE("score_sample argument errors") {
  const auto data = gen_synthetic(small_spec());
  const auto bank = data.bank();
  auto cfg = small_config();
  const auto& f = data.test[0].features;
  cfg.scoring_levels = {1, 2};
  CHECK_THROWS_AS(score_sample(bank, f, cfg), Error);
  cfg = small_config();
  SampleFeatures missing = f;
  missing.erase(3);
  CHECK_THROWS_AS(score_sample(bank, missing, cfg), Error);
  SampleFeatures wrong = f;
  wrong.erase(2);
  wrong.emplace(2, FeatureTensor(2, {4, 16, 4}, std::vector<float>(256, 0.0f)));
  CHECK_THROWS_AS(score_sample(bank, wrong, cfg), Error);
  cfg.ref_level = 5;
  CHECK_THROWS_AS(score_sample(bank, f, cfg), Error);
}

TEST_CASE("output shape is independent of level resolution") {
  const auto data = gen_synthetic(small_spec());
  const auto bank = data.bank();
  for (auto [h, w] : {std::pair{64u, 64u}, {50u, 33u}, {7u, 9u}}) {
    auto cfg = small_config();
    cfg.output_height = h;
    cfg.output_width = w;
    for (auto levels : {std::vector<std::uint32_t>{2}, {3}, {2, 3}}) {
      cfg.scoring_levels = levels;
      const auto map = score_sample(bank, data.test[1].features, cfg);
      CHECK(map.scores.height == h);
      CHECK(map.scores.width == w);
      for (float v : map.scores.values) CHECK((std::isfinite(v) && v >= 0.0f));
    }
  }
}

TEST_CASE("results do not depend on thread counts") {
  const auto data = gen_synthetic(small_spec());
  const auto bank = data.bank();
  const auto samples = data.test_features();
  for (auto sampling : {SamplingMethod::kSubspace, SamplingMethod::kRandom}) {
    auto cfg = small_config();
    cfg.sampling = sampling;
    cfg.seed = 11;
    const auto serial = score_batch(bank, samples, cfg, 1);
    const auto pooled = score_batch(bank, samples, cfg, 4);
    cfg.threads = 2;
    const auto inner = score_batch(bank, samples, cfg, 1);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      CHECK(serial[i].scores == pooled[i].scores);
      CHECK(serial[i].scores == inner[i].scores);
      CHECK(serial[i].subset.indices == pooled[i].subset.indices);
      auto a = serial[i].report("x");
      auto b = pooled[i].report("x");
      a.erase("timing_ms");
      b.erase("timing_ms");
      CHECK(a == b);
    }
  }
}

TEST_CASE("report and PGM output") {
  const auto data = gen_synthetic(small_spec());
  const auto bank = data.bank();
  const auto map = score_sample(bank, data.test[0].features, small_config());
  const auto r = map.report("t0");
  CHECK(r["sample_id"] == "t0");
  CHECK(r["per_level"].contains("2"));
  CHECK(r["per_level"].contains("3"));
  CHECK(r["timing_ms"].contains("total"));
  CHECK(r["subset_indices"].size() == map.subset.indices.size());
  const auto t = map.to_tensor();
  CHECK(t.level() == 0);
  CHECK(t.shape() == TensorShape{64, 64, 1});

  const auto path = std::filesystem::temp_directory_path() / "sgfr_test_map.pgm";
  write_pgm16(map.scores, path);
  std::ifstream in(path, std::ios::binary);
  std::string magic;
  int w = 0;
  int h = 0;
  int maxval = 0;
  in >> magic >> w >> h >> maxval;
  CHECK(magic == "P5");
  CHECK(w == 64);
  CHECK(h == 64);
  CHECK(maxval == 65535);
  CHECK(std::filesystem::file_size(path) == 15 + 2 * 64 * 64);
}
