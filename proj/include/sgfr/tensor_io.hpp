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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace sgfr {

struct TensorShape {
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::uint32_t channels = 0;

  std::size_t size() const noexcept {
    return std::size_t{height} * width * channels;
  }
  std::size_t pixels() const noexcept { return std::size_t{height} * width; }

  friend bool operator==(const TensorShape&, const TensorShape&) = default;
};

std::string to_string(const TensorShape& shape);

// Canonical flatten order: row-major over (y, x), channels last.
inline std::size_t flat_index(const TensorShape& shape, std::size_t y,
                              std::size_t x, std::size_t ch) noexcept {
  return (y * shape.width + x) * shape.channels + ch;
}

/// A h x w x c feature map of one image at one hierarchy level. Values are
/// stored in the canonical flatten order and are always finite.
class FeatureTensor {
 public:
  FeatureTensor() = default;
  FeatureTensor(std::uint32_t level, TensorShape shape,
                std::vector<float> data);

  std::uint32_t level() const noexcept { return level_; }
  const TensorShape& shape() const noexcept { return shape_; }
  std::span<const float> data() const noexcept { return data_; }

  float at(std::size_t y, std::size_t x, std::size_t ch) const {
    return data_[flat_index(shape_, y, x, ch)];
  }

  friend bool operator==(const FeatureTensor&, const FeatureTensor&) = default;

 private:
  std::uint32_t level_ = 0;
  TensorShape shape_;
  std::vector<float> data_;
};

struct FlatFeature {
  std::vector<float> values;
  std::string source_id;

  std::size_t dim() const noexcept { return values.size(); }
};

FlatFeature flatten(const FeatureTensor& tensor, std::string source_id = {});
FeatureTensor reshape(const FlatFeature& feature, std::uint32_t level,
                      TensorShape shape);

// SGT file: "SGT1" | u8 rank=3 | u32 h, w, c | u32 level | h*w*c f32,
// all little-endian.
inline constexpr std::size_t kSgtHeaderBytes = 4 + 1 + 4 * 3 + 4;
inline constexpr std::size_t kMaxTensorElements = (std::size_t{1} << 31) - 1;

std::vector<std::uint8_t> encode_tensor(const FeatureTensor& tensor);
FeatureTensor decode_tensor(std::span<const std::uint8_t> bytes);

FeatureTensor read_tensor(const std::filesystem::path& path);
void write_tensor(const FeatureTensor& tensor,
                  const std::filesystem::path& path);

/// Column-stacked nominal features for one level. Columns are contiguous;
/// norms of the raw columns are cached at construction.
class DictionaryMatrix {
 public:
  DictionaryMatrix() = default;
  DictionaryMatrix(std::size_t dim, std::size_t columns,
                   std::vector<float> column_major);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return columns_; }

  std::span<const float> column(std::size_t j) const noexcept {
    return {data_.data() + j * dim_, dim_};
  }
  double norm(std::size_t j) const noexcept { return norms_[j]; }
  std::span<const double> norms() const noexcept { return norms_; }

 private:
  std::size_t dim_ = 0;
  std::size_t columns_ = 0;
  std::vector<float> data_;
  std::vector<double> norms_;
};

DictionaryMatrix stack_dictionary(std::span<const FlatFeature> features);

}  // namespace sgfr
