// Copyright 2026 The Lanecast Authors
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

#ifndef LANECAST__NUMERICS__CHECKPOINT_HPP_
#define LANECAST__NUMERICS__CHECKPOINT_HPP_

#include "lanecast/numerics/optimizer.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>

namespace lanecast::nn
{

// Little-endian layout:
//   "LCKP" | u32 version | u32 tensor count
//   per tensor: u32 name length | name bytes | u32 rank | u64 dims[rank] | f64 values[]
inline constexpr char kCheckpointMagic[4] = {'L', 'C', 'K', 'P'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

using TensorMap = std::map<std::string, Tensor>;

namespace detail
{

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <typename T>
void write_pod(std::ostream & os, T v)
{
  os.write(reinterpret_cast<const char *>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream & is, const std::string & path)
{
  T v{};
  if (!is.read(reinterpret_cast<char *>(&v), sizeof(T))) {
    throw CheckpointError("truncated checkpoint '" + path + "'");
  }
  return v;
}

}  // namespace detail

inline void save_checkpoint(const std::string & path, const std::vector<std::pair<std::string, Tensor>> & tensors)
{
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) {
    throw CheckpointError("cannot open '" + path + "' for writing");
  }
  os.write(kCheckpointMagic, 4);
  detail::write_pod<std::uint32_t>(os, kCheckpointVersion);
  detail::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(tensors.size()));
  for (const auto & [name, t] : tensors) {
    detail::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    detail::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) {
      detail::write_pod<std::uint64_t>(os, d);
    }
    os.write(
      reinterpret_cast<const char *>(t.values().data()),
      static_cast<std::streamsize>(t.numel() * sizeof(double)));
  }
  if (!os) {
    throw CheckpointError("failed writing '" + path + "'");
  }
}

inline TensorMap load_checkpoint(const std::string & path)
{
  std::ifstream is(path, std::ios::binary);
  if (!is) {
    throw CheckpointError("cannot open checkpoint '" + path + "'");
  }
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kCheckpointMagic, 4) != 0) {
    throw CheckpointError("'" + path + "' is not a lanecast checkpoint");
  }
  const auto version = detail::read_pod<std::uint32_t>(is, path);
  if (version != kCheckpointVersion) {
    throw CheckpointError("checkpoint version " + std::to_string(version) + " unsupported");
  }
  const auto count = detail::read_pod<std::uint32_t>(is, path);
  TensorMap out;
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto name_len = detail::read_pod<std::uint32_t>(is, path);
    std::string name(name_len, '\0');
    if (!is.read(name.data(), name_len)) {
      throw CheckpointError("truncated checkpoint '" + path + "'");
    }
    const auto rank = detail::read_pod<std::uint32_t>(is, path);
    Shape shape(rank);
    for (auto & d : shape) {
      d = static_cast<std::size_t>(detail::read_pod<std::uint64_t>(is, path));
    }
    std::vector<double> values(numel(shape));
    if (!is.read(reinterpret_cast<char *>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)))) {
      throw CheckpointError("truncated checkpoint '" + path + "'");
    }
    out.emplace(name, Tensor::from_values(std::move(shape), std::move(values)));
  }
  return out;
}

}  // namespace lanecast::nn

#endif  // LANECAST__NUMERICS__CHECKPOINT_HPP_
