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

#include "samlp/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "samlp/errors.hpp"

namespace samlp {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O writes host byte order and assumes little-endian");

namespace {

constexpr char kMagic[8] = {'S', 'A', 'M', 'L', 'P', 'C', 'K', 'P'};
// Bounds sanity-checked on read so a corrupt file fails fast.
constexpr std::uint32_t kMaxName = 1u << 16;
constexpr std::uint64_t kMaxElements = 1ull << 32;

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

void put_string(std::ostream& out, const std::string& s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw ConfigError("checkpoint: truncated file");
  }
  return v;
}

std::string get_string(std::istream& in) {
  const auto len = get<std::uint32_t>(in);
  if (len > kMaxName) throw ConfigError("checkpoint: implausible string length");
  std::string s(len, '\0');
  if (len > 0 && !in.read(s.data(), len)) throw ConfigError("checkpoint: truncated file");
  return s;
}

}  // namespace

double Checkpoint::meta_at(const std::string& key) const {
  const auto it = meta.find(key);
  if (it == meta.end()) throw ConfigError("checkpoint: missing metadata '" + key + "'");
  return it->second;
}

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put_string(out, ckpt.kind);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.meta.size()));
  for (const auto& [k, v] : ckpt.meta) {
    put_string(out, k);
    put<double>(out, v);
  }
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& [name, t] : ckpt.tensors) {
    put_string(out, name);
    put<std::uint64_t>(out, t.rows());
    put<std::uint64_t>(out, t.cols());
    const auto data = t.data();
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size_bytes()));
  }
  if (!out) throw ConfigError("checkpoint: write failed");
}

Checkpoint read_checkpoint(std::istream& in) {
  char magic[8];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw ConfigError("checkpoint: bad magic bytes");
  }
  const auto version = get<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw ConfigError("checkpoint: unsupported version " + std::to_string(version));
  }
  Checkpoint ckpt;
  ckpt.kind = get_string(in);
  const auto n_meta = get<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    std::string key = get_string(in);
    ckpt.meta[key] = get<double>(in);
  }
  const auto n_tensors = get<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    std::string name = get_string(in);
    const auto rows = get<std::uint64_t>(in);
    const auto cols = get<std::uint64_t>(in);
    if (rows * cols > kMaxElements) throw ConfigError("checkpoint: implausible tensor shape");
    std::vector<double> data(rows * cols);
    if (!data.empty() &&
        !in.read(reinterpret_cast<char*>(data.data()),
                 static_cast<std::streamsize>(data.size() * sizeof(double)))) {
      throw ConfigError("checkpoint: truncated tensor '" + name + "'");
    }
    ckpt.tensors.emplace_back(std::move(name), Tensor(rows, cols, std::move(data)));
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write checkpoint " + path.string());
  write_checkpoint(out, ckpt);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

std::vector<std::pair<std::string, Tensor>> snapshot_tensors(
    std::span<const NamedParameter> params) {
  std::vector<std::pair<std::string, Tensor>> out;
  out.reserve(params.size());
  for (const auto& p : params) out.emplace_back(p.name, p.param->value);
  return out;
}

void restore_tensors(std::span<const NamedParameter> params,
                     const std::vector<std::pair<std::string, Tensor>>& tensors) {
  if (params.size() != tensors.size()) {
    throw ConfigError("checkpoint: expected " + std::to_string(params.size()) +
                      " tensors, found " + std::to_string(tensors.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& [name, t] = tensors[i];
    if (name != params[i].name) {
      throw ConfigError("checkpoint: tensor " + std::to_string(i) + " is '" + name +
                        "', expected '" + params[i].name + "'");
    }
    if (!t.same_shape(params[i].param->value)) {
      throw ConfigError("checkpoint: tensor '" + name + "' has shape " + t.shape_str() +
                        ", expected " + params[i].param->value.shape_str());
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) params[i].param->value = tensors[i].second;
}

}  // namespace samlp
