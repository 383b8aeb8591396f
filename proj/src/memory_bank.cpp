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

#include "sgfr/memory_bank.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <regex>
#include <set>

#include "sgfr/error.hpp"
#include "sgfr/linalg.hpp"
#include "sgfr/version.hpp"

namespace sgfr {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void check_subset(std::size_t size, std::span<const std::size_t> subset) {
  if (subset.empty()) throw Error(ErrorCode::kEmptyInput, "subset is empty");
  for (std::size_t i : subset) {
    if (i >= size) {
      throw Error(ErrorCode::kInvalidArgument,
                  "subset index " + std::to_string(i) + " out of range");
    }
  }
}

void check_budget(const MemoryBank& bank, std::size_t s_ref) {
  if (s_ref < 1 || s_ref > bank.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "s_ref must be in [1, " + std::to_string(bank.size()) +
                    "], got " + std::to_string(s_ref));
  }
}

// Unbiased draw from [0, n).
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    const std::uint64_t r = rng();
    if (r >= threshold) return r % n;
  }
}

std::vector<std::size_t> iota_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

}  // namespace

MemoryBank::MemoryBank(std::vector<std::string> ids,
                       std::map<std::uint32_t, LevelDictionary> levels,
                       std::uint32_t ref_level, json created_params)
    : ids_(std::move(ids)),
      levels_(std::move(levels)),
      ref_level_(ref_level),
      created_params_(std::move(created_params)) {
  if (ids_.empty()) throw Error(ErrorCode::kEmptyInput, "memory bank has no images");
  if (!levels_.contains(ref_level_)) {
    throw Error(ErrorCode::kMissingLevel,
                "reference level " + std::to_string(ref_level_) + " not in bank");
  }
  for (const auto& [l, entry] : levels_) {
    if (l == 0 || l > ref_level_) {
      throw Error(ErrorCode::kInvalidArgument,
                  "bank level " + std::to_string(l) +
                      " must lie in [1, l_ref=" + std::to_string(ref_level_) + "]");
    }
    if (entry.matrix.size() != ids_.size() || entry.matrix.dim() != entry.shape.size()) {
      throw Error(ErrorCode::kShapeMismatch,
                  "level " + std::to_string(l) + " dictionary is not aligned with the ids");
    }
  }
}

MemoryBank MemoryBank::from_tensors(
    std::vector<std::string> ids,
    const std::vector<std::map<std::uint32_t, FeatureTensor>>& per_image,
    std::uint32_t ref_level, json created_params) {
  if (per_image.empty() || per_image.size() != ids.size()) {
    throw Error(ErrorCode::kEmptyInput, "need one tensor set per id");
  }
  std::map<std::uint32_t, LevelDictionary> levels;
  for (const auto& [l, first] : per_image.front()) {
    std::vector<FlatFeature> columns;
    columns.reserve(per_image.size());
    for (std::size_t i = 0; i < per_image.size(); ++i) {
      const auto it = per_image[i].find(l);
      if (it == per_image[i].end()) {
        throw Error(ErrorCode::kMissingLevel,
                    "image " + ids[i] + " is missing level " + std::to_string(l));
      }
      if (it->second.shape() != first.shape()) {
        throw Error(ErrorCode::kShapeMismatch,
                    "image " + ids[i] + " level " + std::to_string(l) + " has shape " +
                        to_string(it->second.shape()) + ", expected " +
                        to_string(first.shape()));
      }
      columns.push_back(flatten(it->second, ids[i]));
    }
    levels.emplace(l, LevelDictionary{first.shape(), stack_dictionary(columns)});
  }
  return MemoryBank(std::move(ids), std::move(levels), ref_level,
                    std::move(created_params));
}

std::vector<std::uint32_t> MemoryBank::levels() const {
  std::vector<std::uint32_t> out;
  for (const auto& [l, entry] : levels_) out.push_back(l);
  return out;
}

const LevelDictionary& MemoryBank::level(std::uint32_t level) const {
  const auto it = levels_.find(level);
  if (it == levels_.end()) {
    throw Error(ErrorCode::kMissingLevel,
                "level " + std::to_string(level) + " is not in the memory bank");
  }
  return it->second;
}

json MemoryBank::manifest() const {
  json levels = json::array();
  for (const auto& [l, entry] : levels_) {
    levels.push_back({{"level", l},
                      {"h", entry.shape.height},
                      {"w", entry.shape.width},
                      {"c", entry.shape.channels}});
  }
  return {{"version", kManifestVersion},
          {"tool_version", version_string()},
          {"nominal_ids", ids_},
          {"N", ids_.size()},
          {"levels", levels},
          {"l_ref", ref_level_},
          {"created_params", created_params_}};
}

std::string feature_file_name(const std::string& id, std::uint32_t level) {
  return id + "_l" + std::to_string(level) + ".sgt";
}

std::vector<std::string> list_feature_ids(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw Error(ErrorCode::kIo, "feature directory not found: " + dir.string());
  }
  static const std::regex pattern(R"(^(.+)_l([0-9]+)\.sgt$)");
  std::set<std::string> ids;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    std::smatch m;
    if (std::regex_match(name, m, pattern)) ids.insert(m[1].str());
  }
  return {ids.begin(), ids.end()};
}

MemoryBank build_bank(const fs::path& feature_dir,
                      std::span<const std::uint32_t> levels,
                      std::optional<std::uint32_t> ref_level) {
  if (levels.empty()) throw Error(ErrorCode::kInvalidArgument, "no levels requested");
  std::set<std::uint32_t> wanted(levels.begin(), levels.end());
  const std::uint32_t ref = ref_level.value_or(*wanted.rbegin());
  wanted.insert(ref);

  auto ids = list_feature_ids(feature_dir);
  if (ids.empty()) {
    throw Error(ErrorCode::kEmptyInput,
                "no <id>_l<level>.sgt files in " + feature_dir.string());
  }
  std::vector<std::map<std::uint32_t, FeatureTensor>> per_image(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (std::uint32_t l : wanted) {
      const fs::path path = feature_dir / feature_file_name(ids[i], l);
      if (!fs::exists(path)) {
        throw Error(ErrorCode::kMissingLevel,
                    "image '" + ids[i] + "' is missing level " + std::to_string(l) +
                        " (" + path.string() + ")");
      }
      FeatureTensor t = read_tensor(path);
      if (t.level() != l) {
        throw Error(ErrorCode::kShapeMismatch,
                    path.string() + " declares level " + std::to_string(t.level()));
      }
      per_image[i].emplace(l, std::move(t));
    }
  }
  json params = {{"levels", std::vector<std::uint32_t>(wanted.begin(), wanted.end())},
                 {"l_ref", ref}};
  return MemoryBank::from_tensors(std::move(ids), per_image, ref, std::move(params));
}

void save_bank(const MemoryBank& bank, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
  for (std::uint32_t l : bank.levels()) {
    const auto& entry = bank.level(l);
    for (std::size_t i = 0; i < bank.size(); ++i) {
      const auto col = entry.matrix.column(i);
      write_tensor(FeatureTensor(l, entry.shape, {col.begin(), col.end()}),
                   dir / feature_file_name(bank.ids()[i], l));
    }
  }
  std::ofstream out(dir / kManifestFile, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write manifest in " + dir.string());
  out << bank.manifest().dump(2) << "\n";
}

MemoryBank load_bank(const fs::path& dir) {
  std::ifstream in(dir / kManifestFile);
  if (!in) throw Error(ErrorCode::kIo, "no manifest.json in " + dir.string());
  json manifest;
  try {
    manifest = json::parse(in);
    if (manifest.at("version").get<int>() != kManifestVersion) {
      throw Error(ErrorCode::kInvalidArgument, "unsupported manifest version");
    }
    const auto ids = manifest.at("nominal_ids").get<std::vector<std::string>>();
    const auto ref = manifest.at("l_ref").get<std::uint32_t>();
    std::vector<std::map<std::uint32_t, FeatureTensor>> per_image(ids.size());
    for (const auto& lv : manifest.at("levels")) {
      const auto l = lv.at("level").get<std::uint32_t>();
      const TensorShape shape{lv.at("h").get<std::uint32_t>(), lv.at("w").get<std::uint32_t>(),
                              lv.at("c").get<std::uint32_t>()};
      for (std::size_t i = 0; i < ids.size(); ++i) {
        FeatureTensor t = read_tensor(dir / feature_file_name(ids[i], l));
        if (t.shape() != shape || t.level() != l) {
          throw Error(ErrorCode::kShapeMismatch,
                      "tensor for '" + ids[i] + "' level " + std::to_string(l) +
                          " does not match the manifest");
        }
        per_image[i].emplace(l, std::move(t));
      }
    }
    return MemoryBank::from_tensors(ids, per_image, ref,
                                    manifest.value("created_params", json::object()));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument,
                "malformed manifest in " + dir.string() + ": " + e.what());
  }
}

const char* to_string(SamplingMethod method) noexcept {
  switch (method) {
    case SamplingMethod::kSubspace: return "subspace";
    case SamplingMethod::kRandom: return "random";
    case SamplingMethod::kNearest: return "nearest";
    case SamplingMethod::kFull: return "full";
  }
  return "unknown";
}

SamplingMethod parse_sampling_method(const std::string& name) {
  if (name == "subspace") return SamplingMethod::kSubspace;
  if (name == "random") return SamplingMethod::kRandom;
  if (name == "nearest") return SamplingMethod::kNearest;
  if (name == "full" || name == "none") return SamplingMethod::kFull;
  throw Error(ErrorCode::kInvalidArgument, "unknown sampling method '" + name + "'");
}

SampledSubset sample_subspace(const MemoryBank& bank, std::span<const float> y_ref,
                              std::size_t s_ref, const OmpConfig& config) {
  check_budget(bank, s_ref);
  OmpConfig ref_config = config;
  ref_config.sparsity = s_ref;
  const auto& dict = bank.reference();
  SampledSubset out;
  out.method = SamplingMethod::kSubspace;
  out.ref_code = omp_solve(y_ref, dict, all_columns(dict), ref_config);
  if (s_ref == bank.size()) {
    out.indices = iota_indices(bank.size());
  } else {
    out.indices = out.ref_code.support;
    std::sort(out.indices.begin(), out.indices.end());
  }
  return out;
}

SampledSubset sample_random(const MemoryBank& bank, std::size_t s_ref,
                            std::uint64_t seed) {
  check_budget(bank, s_ref);
  std::mt19937_64 rng(seed);
  auto idx = iota_indices(bank.size());
  // Partial Fisher-Yates: the first s_ref slots become the sample.
  for (std::size_t i = 0; i < s_ref; ++i) {
    const std::size_t j = i + bounded(rng, idx.size() - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(s_ref);
  std::sort(idx.begin(), idx.end());
  SampledSubset out;
  out.indices = std::move(idx);
  out.method = SamplingMethod::kRandom;
  return out;
}

SampledSubset sample_nearest(const MemoryBank& bank, std::span<const float> y_ref,
                             std::size_t s_ref) {
  check_budget(bank, s_ref);
  const auto& dict = bank.reference();
  if (y_ref.size() != dict.dim()) {
    throw Error(ErrorCode::kShapeMismatch, "query does not match the reference level");
  }
  std::vector<std::pair<double, std::size_t>> dist(dict.size());
  for (std::size_t i = 0; i < dict.size(); ++i) {
    const auto x = dict.column(i);
    double d = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double diff = static_cast<double>(x[k]) - y_ref[k];
      d += diff * diff;
    }
    dist[i] = {d, i};
  }
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(s_ref),
                    dist.end());
  SampledSubset out;
  out.method = SamplingMethod::kNearest;
  for (std::size_t k = 0; k < s_ref; ++k) out.indices.push_back(dist[k].second);
  std::sort(out.indices.begin(), out.indices.end());
  return out;
}

SampledSubset sample_full(const MemoryBank& bank) {
  SampledSubset out;
  out.indices = iota_indices(bank.size());
  out.method = SamplingMethod::kFull;
  return out;
}

double coverage_error(const DictionaryMatrix& dictionary,
                      std::span<const std::size_t> subset) {
  check_subset(dictionary.size(), subset);
  // Dependent columns add nothing to the span, so skipping them keeps P exact.
  linalg::IncrementalQr basis(dictionary.dim());
  std::vector<bool> in_subset(dictionary.size(), false);
  for (std::size_t i : subset) {
    in_subset[i] = true;
    basis.append(dictionary.column(i));
  }
  double total = 0.0;
  for (std::size_t j = 0; j < dictionary.size(); ++j) {
    if (in_subset[j]) continue;
    total += linalg::norm(basis.residual_of(dictionary.column(j)));
  }
  return total / static_cast<double>(dictionary.size());
}

double coverage_error(const MemoryBank& bank, std::uint32_t level,
                      std::span<const std::size_t> subset) {
  return coverage_error(bank.dictionary(level), subset);
}

double nn_matching_error(const DictionaryMatrix& dictionary,
                         std::span<const std::size_t> subset) {
  check_subset(dictionary.size(), subset);
  double total = 0.0;
  for (std::size_t j = 0; j < dictionary.size(); ++j) {
    const auto xj = dictionary.column(j);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i : subset) {
      const auto xi = dictionary.column(i);
      double d = 0.0;
      for (std::size_t k = 0; k < xj.size(); ++k) {
        const double diff = static_cast<double>(xj[k]) - xi[k];
        d += diff * diff;
      }
      best = std::min(best, d);
    }
    total += std::sqrt(best);
  }
  return total / static_cast<double>(dictionary.size());
}

double nn_matching_error(const MemoryBank& bank, std::uint32_t level,
                         std::span<const std::size_t> subset) {
  return nn_matching_error(bank.dictionary(level), subset);
}

}  // namespace sgfr
