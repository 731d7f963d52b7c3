// Copyright 2026 The samlp Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "samlp/tensor.hpp"

namespace samlp {

/// Versioned binary parameter blob.
///
/// Layout (little-endian):
///   magic     8 bytes  "SAMLPCKP"
///   version   u32      kCheckpointVersion
///   kind      u32 length + bytes ("sage", "samlp", "mlp")
///   metadata  u32 count, then (u32 length + key bytes, f64 value) each
///   tensors   u32 count, then (u32 length + name bytes, u64 rows, u64 cols,
///             rows*cols f64 row-major) each
struct Checkpoint {
  std::string kind;
  std::map<std::string, double> meta;
  std::vector<std::pair<std::string, Tensor>> tensors;

  /// Throws ConfigError when the key is absent.
  double meta_at(const std::string& key) const;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in);
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Copies parameter values in order.
std::vector<std::pair<std::string, Tensor>> snapshot_tensors(std::span<const NamedParameter> params);
/// Copies values back; names and shapes must match `params` exactly.
void restore_tensors(std::span<const NamedParameter> params,
                     const std::vector<std::pair<std::string, Tensor>>& tensors);

}  // namespace samlp
