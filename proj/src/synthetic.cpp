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

#include "sgfr/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "sgfr/error.hpp"
#include "sgfr/linalg.hpp"
#include "sgfr/version.hpp"

namespace sgfr {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string make_id(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%04zu", prefix, i);
  return buf;
}

const LevelSpec& finest(const std::vector<LevelSpec>& levels) {
  return *std::max_element(levels.begin(), levels.end(), [](const auto& a, const auto& b) {
    return a.shape.pixels() < b.shape.pixels();
  });
}

struct Block {
  std::uint32_t y0, x0, h, w;  // in finest-level cells
};

// Cells of a level covered by a block given at the finest resolution.
void block_range(const Block& b, const TensorShape& fine, const TensorShape& shape,
                 std::uint32_t& y_begin, std::uint32_t& y_end, std::uint32_t& x_begin,
                 std::uint32_t& x_end) {
  auto lo = [](std::uint32_t v, std::uint32_t n, std::uint32_t f) {
    return static_cast<std::uint32_t>((std::uint64_t{v} * n) / f);
  };
  auto hi = [](std::uint32_t v, std::uint32_t n, std::uint32_t f) {
    return static_cast<std::uint32_t>((std::uint64_t{v} * n + f - 1) / f);
  };
  y_begin = lo(b.y0, shape.height, fine.height);
  y_end = std::max(y_begin + 1, hi(b.y0 + b.h, shape.height, fine.height));
  x_begin = lo(b.x0, shape.width, fine.width);
  x_end = std::max(x_begin + 1, hi(b.x0 + b.w, shape.width, fine.width));
}

std::vector<float> to_float(const std::vector<double>& v) {
  return {v.begin(), v.end()};
}

}  // namespace

void SyntheticSpec::validate() const {
  if (levels.empty()) throw Error(ErrorCode::kInvalidArgument, "synthetic spec has no levels");
  for (const auto& l : levels) {
    if (l.level == 0 || l.shape.size() == 0) {
      throw Error(ErrorCode::kInvalidShape, "synthetic levels need level >= 1 and a non-empty shape");
    }
    if (subspace_dim >= l.shape.size()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "subspace dim must be below the ambient dim of level " + std::to_string(l.level));
    }
  }
  if (subspace_dim == 0 || n_subspaces == 0 || points_per_subspace == 0) {
    throw Error(ErrorCode::kInvalidArgument, "subspace counts must be positive");
  }
  if (noise_sigma < 0.0 || anomaly_magnitude < 0.0 || anomaly_fraction < 0.0 ||
      anomaly_fraction > 1.0) {
    throw Error(ErrorCode::kInvalidArgument, "noise/anomaly parameters out of range");
  }
  const auto& fine = finest(levels).shape;
  if (n_test > 0 && (block_height == 0 || block_width == 0 ||
                     block_height > fine.height || block_width > fine.width)) {
    throw Error(ErrorCode::kInvalidArgument,
                "anomaly block " + std::to_string(block_height) + "x" +
                    std::to_string(block_width) + " exceeds the " + std::to_string(fine.height) +
                    "x" + std::to_string(fine.width) + " grid");
  }
  if (n_test > 0 && (output_height == 0 || output_width == 0)) {
    throw Error(ErrorCode::kInvalidArgument, "output size must be positive");
  }
}

json SyntheticSpec::to_json() const {
  json lv = json::array();
  for (const auto& l : levels) {
    lv.push_back({{"level", l.level}, {"h", l.shape.height}, {"w", l.shape.width}, {"c", l.shape.channels}});
  }
  return {{"levels", lv},
          {"subspace_dim", subspace_dim},
          {"n_subspaces", n_subspaces},
          {"points_per_subspace", points_per_subspace},
          {"n_test", n_test},
          {"noise_sigma", noise_sigma},
          {"anomaly_magnitude", anomaly_magnitude},
          {"anomaly_fraction", anomaly_fraction},
          {"block", {block_height, block_width}},
          {"output_size", {output_height, output_width}},
          {"seed", seed}};
}

SyntheticSpec SyntheticSpec::from_json(const json& j) {
  SyntheticSpec s;
  s.levels.clear();
  for (const auto& l : j.at("levels")) {
    s.levels.push_back({l.at("level").get<std::uint32_t>(),
                        {l.at("h").get<std::uint32_t>(), l.at("w").get<std::uint32_t>(),
                         l.at("c").get<std::uint32_t>()}});
  }
  s.subspace_dim = j.at("subspace_dim");
  s.n_subspaces = j.at("n_subspaces");
  s.points_per_subspace = j.at("points_per_subspace");
  s.n_test = j.at("n_test");
  s.noise_sigma = j.at("noise_sigma");
  s.anomaly_magnitude = j.at("anomaly_magnitude");
  s.anomaly_fraction = j.at("anomaly_fraction");
  s.block_height = j.at("block").at(0);
  s.block_width = j.at("block").at(1);
  s.output_height = j.at("output_size").at(0);
  s.output_width = j.at("output_size").at(1);
  s.seed = j.at("seed");
  return s;
}

SyntheticSpec SyntheticSpec::flat(std::uint32_t ambient_dim, std::uint32_t subspace_dim,
                                  std::uint32_t n_subspaces, std::uint32_t points_per_subspace,
                                  std::uint64_t seed) {
  SyntheticSpec s;
  s.levels = {{1, {1, 1, ambient_dim}}};
  s.subspace_dim = subspace_dim;
  s.n_subspaces = n_subspaces;
  s.points_per_subspace = points_per_subspace;
  s.n_test = 0;
  s.seed = seed;
  return s;
}

std::vector<LevelSpec> SyntheticSpec::halving_chain(std::uint32_t first_level, TensorShape first,
                                                    std::uint32_t count) {
  std::vector<LevelSpec> out;
  for (std::uint32_t i = 0; i < count; ++i) {
    out.push_back({first_level + i, first});
    first = {std::max(1u, first.height / 2), std::max(1u, first.width / 2), first.channels * 2};
  }
  return out;
}

MemoryBank SyntheticDataset::bank() const {
  std::vector<std::string> ids;
  std::vector<SampleFeatures> features;
  for (const auto& n : nominal) {
    ids.push_back(n.id);
    features.push_back(n.features);
  }
  std::uint32_t ref = 0;
  for (const auto& l : spec.levels) ref = std::max(ref, l.level);
  return MemoryBank::from_tensors(std::move(ids), features, ref,
                                  {{"source", "synthetic"}, {"spec", spec.to_json()}});
}

std::vector<SampleFeatures> SyntheticDataset::test_features() const {
  std::vector<SampleFeatures> out;
  for (const auto& t : test) out.push_back(t.features);
  return out;
}

std::vector<double> random_orthonormal_basis(std::size_t dim, std::size_t rank,
                                             std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  linalg::IncrementalQr qr(dim);
  std::vector<double> column(dim);
  while (qr.rank() < rank) {
    for (double& v : column) v = gauss(rng);
    qr.append(std::span<const double>(column));
  }
  std::vector<double> basis;
  basis.reserve(dim * rank);
  for (std::size_t k = 0; k < rank; ++k) {
    const auto q = qr.q(k);
    basis.insert(basis.end(), q.begin(), q.end());
  }
  return basis;
}

std::vector<double> subspace_point(std::span<const double> basis, std::size_t dim,
                                   std::size_t rank, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> z(rank);
  double zn = 0.0;
  while (zn == 0.0) {
    for (double& v : z) v = gauss(rng);
    zn = linalg::norm(z);
  }
  std::vector<double> x(dim, 0.0);
  for (std::size_t k = 0; k < rank; ++k) {
    const double c = z[k] / zn;
    for (std::size_t i = 0; i < dim; ++i) x[i] += c * basis[k * dim + i];
  }
  return x;
}

SyntheticDataset gen_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t d = spec.subspace_dim;

  // bases[a][level index]
  std::vector<std::vector<std::vector<double>>> bases(spec.n_subspaces);
  for (auto& per_level : bases) {
    for (const auto& l : spec.levels) {
      per_level.push_back(random_orthonormal_basis(l.shape.size(), d, rng));
    }
  }

  // The same latent point is used at every level so that hierarchy levels
  // agree on which subspace an image belongs to.
  auto draw = [&](std::uint32_t a) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> z(d);
    double zn = 0.0;
    while (zn == 0.0) {
      for (double& v : z) v = g(rng);
      zn = linalg::norm(z);
    }
    for (double& v : z) v /= zn;
    std::vector<std::vector<double>> features;
    for (std::size_t li = 0; li < spec.levels.size(); ++li) {
      const std::size_t dim = spec.levels[li].shape.size();
      const auto& basis = bases[a][li];
      std::vector<double> x(dim, 0.0);
      for (std::size_t k = 0; k < d; ++k) {
        for (std::size_t i = 0; i < dim; ++i) x[i] += z[k] * basis[k * dim + i];
      }
      if (spec.noise_sigma > 0.0) {
        const double scale = spec.noise_sigma / std::sqrt(static_cast<double>(dim));
        for (double& v : x) v += scale * gauss(rng);
      }
      features.push_back(std::move(x));
    }
    return features;
  };

  SyntheticDataset data;
  data.spec = spec;
  for (std::uint32_t a = 0; a < spec.n_subspaces; ++a) {
    for (std::uint32_t p = 0; p < spec.points_per_subspace; ++p) {
      SyntheticSample s;
      s.id = make_id("nominal", data.nominal.size());
      s.subspace = a;
      auto features = draw(a);
      for (std::size_t li = 0; li < spec.levels.size(); ++li) {
        const auto& l = spec.levels[li];
        s.features.emplace(l.level, FeatureTensor(l.level, l.shape, to_float(features[li])));
      }
      data.nominal.push_back(std::move(s));
    }
  }

  const TensorShape fine = finest(spec.levels).shape;
  for (std::uint32_t t = 0; t < spec.n_test; ++t) {
    SyntheticSample s;
    s.id = make_id("test", t);
    s.subspace = static_cast<std::uint32_t>(
        std::min<double>(unit(rng) * spec.n_subspaces, spec.n_subspaces - 1));
    auto features = draw(s.subspace);
    s.anomalous = unit(rng) < spec.anomaly_fraction;
    std::vector<std::uint8_t> mask(std::size_t{spec.output_height} * spec.output_width, 0);
    if (s.anomalous) {
      Block b{};
      b.h = spec.block_height;
      b.w = spec.block_width;
      b.y0 = static_cast<std::uint32_t>(unit(rng) * (fine.height - b.h + 1));
      b.x0 = static_cast<std::uint32_t>(unit(rng) * (fine.width - b.w + 1));
      b.y0 = std::min(b.y0, fine.height - b.h);
      b.x0 = std::min(b.x0, fine.width - b.w);
      for (std::size_t li = 0; li < spec.levels.size(); ++li) {
        const auto& shape = spec.levels[li].shape;
        std::uint32_t y0, y1, x0, x1;
        block_range(b, fine, shape, y0, y1, x0, x1);
        // Nominal pixels have mean norm 1/sqrt(h w) for unit-norm features.
        const double pixel_norm =
            spec.anomaly_magnitude / std::sqrt(static_cast<double>(shape.pixels()));
        std::vector<double> v(shape.channels);
        for (std::uint32_t y = y0; y < y1; ++y) {
          for (std::uint32_t x = x0; x < x1; ++x) {
            for (double& c : v) c = gauss(rng);
            const double vn = linalg::norm(v);
            for (std::uint32_t ch = 0; ch < shape.channels; ++ch) {
              features[li][flat_index(shape, y, x, ch)] += pixel_norm * v[ch] / vn;
            }
          }
        }
      }
      for (std::uint32_t y = 0; y < spec.output_height; ++y) {
        const auto cy = static_cast<std::uint32_t>(std::uint64_t{y} * fine.height / spec.output_height);
        if (cy < b.y0 || cy >= b.y0 + b.h) continue;
        for (std::uint32_t x = 0; x < spec.output_width; ++x) {
          const auto cx = static_cast<std::uint32_t>(std::uint64_t{x} * fine.width / spec.output_width);
          if (cx >= b.x0 && cx < b.x0 + b.w) mask[std::size_t{y} * spec.output_width + x] = 1;
        }
      }
    }
    for (std::size_t li = 0; li < spec.levels.size(); ++li) {
      const auto& l = spec.levels[li];
      s.features.emplace(l.level, FeatureTensor(l.level, l.shape, to_float(features[li])));
    }
    data.masks.emplace_back(spec.output_height, spec.output_width, std::move(mask));
    data.test.push_back(std::move(s));
  }
  return data;
}

void write_synthetic(const SyntheticDataset& data, const fs::path& dir) {
  std::error_code ec;
  for (const char* sub : {"nominal", "test", "masks"}) {
    fs::create_directories(dir / sub, ec);
    if (ec) throw Error(ErrorCode::kIo, "cannot create " + (dir / sub).string());
  }
  json nominal = json::array();
  for (const auto& s : data.nominal) {
    for (const auto& [l, t] : s.features) write_tensor(t, dir / "nominal" / feature_file_name(s.id, l));
    nominal.push_back({{"id", s.id}, {"subspace", s.subspace}});
  }
  json test = json::array();
  for (std::size_t i = 0; i < data.test.size(); ++i) {
    const auto& s = data.test[i];
    for (const auto& [l, t] : s.features) write_tensor(t, dir / "test" / feature_file_name(s.id, l));
    write_tensor(data.masks[i].to_tensor(), dir / "masks" / (s.id + "_mask.sgt"));
    test.push_back({{"id", s.id}, {"subspace", s.subspace}, {"anomalous", s.anomalous}});
  }
  std::ofstream out(dir / "synth.json", std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + (dir / "synth.json").string());
  out << json{{"tool_version", version_string()},
              {"spec", data.spec.to_json()},
              {"nominal", nominal},
              {"test", test}}
             .dump(2)
      << "\n";
}

}  // namespace sgfr
