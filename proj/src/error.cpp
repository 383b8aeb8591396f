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

#include "sgfr/error.hpp"

namespace sgfr {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kIo: return "i/o error";
    case ErrorCode::kBadMagic: return "bad magic";
    case ErrorCode::kBadRank: return "unsupported rank";
    case ErrorCode::kInvalidShape: return "invalid shape";
    case ErrorCode::kDimensionOverflow: return "dimension overflow";
    case ErrorCode::kNonFinite: return "non-finite value";
    case ErrorCode::kTruncated: return "truncated payload";
    case ErrorCode::kTrailingData: return "trailing data";
    case ErrorCode::kShapeMismatch: return "shape mismatch";
    case ErrorCode::kMissingLevel: return "missing level";
    case ErrorCode::kEmptyInput: return "empty input";
    case ErrorCode::kNumerical: return "numerical failure";
  }
  return "unknown error";
}

}  // namespace sgfr
