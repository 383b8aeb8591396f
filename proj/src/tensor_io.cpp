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

#include "sgfr/tensor_io.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>

#include "sgfr/error.hpp"
#include "sgfr/linalg.hpp"

namespace sgfr {
namespace {

constexpr std::uint8_t kMagic[4] = {'S', 'G', 'T', '1'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) |
         (std::uint32_t{p[2]} << 16) | (std::uint32_t{p[3]} << 24);
}

void check_finite(std::span<const float> data) {
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!std::isfinite(data[i])) {
      throw Error(ErrorCode::kNonFinite,
                  "non-finite value at element " + std::to_string(i));
    }
  }
}

}  // namespace

std::string to_string(const TensorShape& shape) {
  return std::to_string(shape.height) + "x" + std::to_string(shape.width) +
         "x" + std::to_string(shape.channels);
}

FeatureTensor::FeatureTensor(std::uint32_t level, TensorShape shape,
                             std::vector<float> data)
    : level_(level), shape_(shape), data_(std::move(data)) {
  if (shape_.height == 0 || shape_.width == 0 || shape_.channels == 0) {
    throw Error(ErrorCode::kInvalidShape,
                "tensor dimensions must be positive, got " + to_string(shape_));
  }
  if (data_.size() != shape_.size()) {
    throw Error(ErrorCode::kShapeMismatch,
                "tensor " + to_string(shape_) + " needs " +
                    std::to_string(shape_.size()) + " values, got " +
                    std::to_string(data_.size()));
  }
  check_finite(data_);
}

FlatFeature flatten(const FeatureTensor& tensor, std::string source_id) {
  const auto data = tensor.data();
  return FlatFeature{{data.begin(), data.end()}, std::move(source_id)};
}

FeatureTensor reshape(const FlatFeature& feature, std::uint32_t level,
                      TensorShape shape) {
  return FeatureTensor(level, shape, feature.values);
}

std::vector<std::uint8_t> encode_tensor(const FeatureTensor& tensor) {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  out.reserve(kSgtHeaderBytes + 4 * tensor.data().size());
  out.push_back(3);
  put_u32(out, tensor.shape().height);
  put_u32(out, tensor.shape().width);
  put_u32(out, tensor.shape().channels);
  put_u32(out, tensor.level());
  for (float v : tensor.data()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

FeatureTensor decode_tensor(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || !std::equal(std::begin(kMagic), std::end(kMagic),
                                      bytes.begin())) {
    throw Error(ErrorCode::kBadMagic, "not an SGT tensor (bad magic)");
  }
  if (bytes.size() < kSgtHeaderBytes) {
    throw Error(ErrorCode::kTruncated, "SGT header truncated");
  }
  if (bytes[4] != 3) {
    throw Error(ErrorCode::kBadRank,
                "SGT rank must be 3, got " + std::to_string(bytes[4]));
  }
  const TensorShape shape{get_u32(&bytes[5]), get_u32(&bytes[9]),
                          get_u32(&bytes[13])};
  const std::uint32_t level = get_u32(&bytes[17]);
  if (shape.height == 0 || shape.width == 0 || shape.channels == 0) {
    throw Error(ErrorCode::kInvalidShape,
                "SGT dimensions must be positive, got " + to_string(shape));
  }
  // Each factor is < 2^32, so the first product cannot overflow 64 bits.
  const std::uint64_t hw = std::uint64_t{shape.height} * shape.width;
  if (hw > kMaxTensorElements ||
      hw * shape.channels > kMaxTensorElements) {
    throw Error(ErrorCode::kDimensionOverflow,
                "SGT dimensions " + to_string(shape) + " exceed the element limit");
  }
  const std::size_t count = shape.size();
  const std::size_t payload = bytes.size() - kSgtHeaderBytes;
  if (payload < 4 * count) {
    throw Error(ErrorCode::kTruncated,
                "SGT payload truncated: expected " + std::to_string(count) +
                    " floats, found " + std::to_string(payload / 4));
  }
  if (payload > 4 * count) {
    throw Error(ErrorCode::kTrailingData,
                "SGT file has " + std::to_string(payload - 4 * count) +
                    " bytes after the payload");
  }
  std::vector<float> data(count);
  const std::uint8_t* p = bytes.data() + kSgtHeaderBytes;
  for (std::size_t i = 0; i < count; ++i, p += 4) {
    data[i] = std::bit_cast<float>(get_u32(p));
  }
  return FeatureTensor(level, shape, std::move(data));
}

FeatureTensor read_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return decode_tensor(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

void write_tensor(const FeatureTensor& tensor,
                  const std::filesystem::path& path) {
  const auto bytes = encode_tensor(tensor);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

DictionaryMatrix::DictionaryMatrix(std::size_t dim, std::size_t columns,
                                   std::vector<float> column_major)
    : dim_(dim), columns_(columns), data_(std::move(column_major)) {
  if (dim_ == 0 || columns_ == 0) {
    throw Error(ErrorCode::kEmptyInput, "dictionary must be non-empty");
  }
  if (data_.size() != dim_ * columns_) {
    throw Error(ErrorCode::kShapeMismatch,
                "dictionary storage does not match dim x columns");
  }
  check_finite(data_);
  norms_.resize(columns_);
  for (std::size_t j = 0; j < columns_; ++j) norms_[j] = linalg::norm(column(j));
}

DictionaryMatrix stack_dictionary(std::span<const FlatFeature> features) {
  if (features.empty()) {
    throw Error(ErrorCode::kEmptyInput, "cannot stack an empty feature list");
  }
  const std::size_t dim = features.front().dim();
  std::vector<float> data;
  data.reserve(dim * features.size());
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].dim() != dim) {
      throw Error(ErrorCode::kShapeMismatch,
                  "feature " + std::to_string(i) + " has dim " +
                      std::to_string(features[i].dim()) + ", expected " +
                      std::to_string(dim));
    }
    data.insert(data.end(), features[i].values.begin(), features[i].values.end());
  }
  return DictionaryMatrix(dim, features.size(), std::move(data));
}

}  // namespace sgfr
