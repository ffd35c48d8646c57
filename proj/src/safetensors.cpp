// Copyright 2026 The baved-ser Authors
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

#include "baved/safetensors.hpp"

#include <fcntl.h>
#include <sys/mman.h>
#include <sys/stat.h>
#include <unistd.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace baved {
namespace {

std::size_t dtype_size(const std::string& dtype) {
  if (dtype == "F32") return 4;
  if (dtype == "F64") return 8;
  if (dtype == "F16" || dtype == "BF16") return 2;
  throw std::runtime_error("unsupported safetensors dtype " + dtype);
}

float half_to_float(std::uint16_t h) {
  const std::uint32_t sign = (h & 0x8000u) << 16;
  std::uint32_t exp = (h >> 10) & 0x1F;
  std::uint32_t mant = h & 0x3FF;
  std::uint32_t bits;
  if (exp == 0) {
    if (mant == 0) {
      bits = sign;
    } else {
      exp = 127 - 15 + 1;
      while (!(mant & 0x400)) {
        mant <<= 1;
        --exp;
      }
      mant &= 0x3FF;
      bits = sign | (exp << 23) | (mant << 13);
    }
  } else if (exp == 0x1F) {
    bits = sign | 0x7F800000u | (mant << 13);
  } else {
    bits = sign | ((exp + 127 - 15) << 23) | (mant << 13);
  }
  return std::bit_cast<float>(bits);
}

template <typename Out>
std::vector<Out> convert(const SafetensorsFile::Entry& e) {
  const auto n = static_cast<std::size_t>(e.numel());
  std::vector<Out> out(n);
  const auto* p = reinterpret_cast<const unsigned char*>(e.bytes.data());
  static_assert(std::endian::native == std::endian::little, "little-endian host required");
  if (e.dtype == "F32") {
    for (std::size_t i = 0; i < n; ++i) {
      float f;
      std::memcpy(&f, p + 4 * i, 4);
      out[i] = static_cast<Out>(f);
    }
  } else if (e.dtype == "F64") {
    for (std::size_t i = 0; i < n; ++i) {
      double d;
      std::memcpy(&d, p + 8 * i, 8);
      out[i] = static_cast<Out>(d);
    }
  } else if (e.dtype == "F16") {
    for (std::size_t i = 0; i < n; ++i) {
      std::uint16_t h;
      std::memcpy(&h, p + 2 * i, 2);
      out[i] = static_cast<Out>(half_to_float(h));
    }
  } else {  // BF16
    for (std::size_t i = 0; i < n; ++i) {
      std::uint16_t h;
      std::memcpy(&h, p + 2 * i, 2);
      out[i] = static_cast<Out>(std::bit_cast<float>(static_cast<std::uint32_t>(h) << 16));
    }
  }
  return out;
}

}  // namespace

struct SafetensorsFile::Mapping {
  void* base = nullptr;
  std::size_t size = 0;
  ~Mapping() {
    if (base && base != MAP_FAILED) ::munmap(base, size);
  }
};

SafetensorsFile::SafetensorsFile(SafetensorsFile&&) noexcept = default;
SafetensorsFile& SafetensorsFile::operator=(SafetensorsFile&&) noexcept = default;
SafetensorsFile::~SafetensorsFile() = default;

std::int64_t SafetensorsFile::Entry::numel() const {
  std::int64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

SafetensorsFile SafetensorsFile::open(const std::filesystem::path& path) {
  const int fd = ::open(path.c_str(), O_RDONLY);
  if (fd < 0) throw std::runtime_error("cannot open " + path.string());
  struct stat st {};
  if (::fstat(fd, &st) != 0) {
    ::close(fd);
    throw std::runtime_error("cannot stat " + path.string());
  }
  SafetensorsFile file;
  file.mapping_ = std::make_unique<Mapping>();
  file.mapping_->size = static_cast<std::size_t>(st.st_size);
  if (file.mapping_->size < 8) {
    ::close(fd);
    throw std::runtime_error(path.string() + ": too small for a safetensors header");
  }
  file.mapping_->base = ::mmap(nullptr, file.mapping_->size, PROT_READ, MAP_PRIVATE, fd, 0);
  ::close(fd);
  if (file.mapping_->base == MAP_FAILED) throw std::runtime_error("cannot map " + path.string());

  const auto* bytes = static_cast<const std::byte*>(file.mapping_->base);
  std::uint64_t header_len = 0;
  std::memcpy(&header_len, bytes, 8);
  if (header_len > file.mapping_->size - 8)
    throw std::runtime_error(path.string() + ": header length exceeds file size");
  const std::string header(reinterpret_cast<const char*>(bytes + 8), header_len);
  const auto json = nlohmann::json::parse(header, nullptr, false);
  if (json.is_discarded() || !json.is_object())
    throw std::runtime_error(path.string() + ": header is not a JSON object");

  const std::byte* data = bytes + 8 + header_len;
  const std::size_t data_size = file.mapping_->size - 8 - header_len;
  for (const auto& [name, value] : json.items()) {
    if (name == "__metadata__") {
      for (const auto& [k, v] : value.items()) file.metadata_[k] = v.get<std::string>();
      continue;
    }
    Entry e;
    e.dtype = value.at("dtype").get<std::string>();
    e.shape = value.at("shape").get<std::vector<std::int64_t>>();
    const auto offsets = value.at("data_offsets").get<std::vector<std::uint64_t>>();
    if (offsets.size() != 2 || offsets[0] > offsets[1] || offsets[1] > data_size)
      throw std::runtime_error(path.string() + ": bad offsets for " + name);
    const std::uint64_t expected = static_cast<std::uint64_t>(e.numel()) * dtype_size(e.dtype);
    if (offsets[1] - offsets[0] != expected)
      throw std::runtime_error(path.string() + ": byte size mismatch for " + name);
    e.bytes = std::span<const std::byte>(data + offsets[0], offsets[1] - offsets[0]);
    file.entries_.emplace(name, std::move(e));
  }
  return file;
}

const SafetensorsFile::Entry& SafetensorsFile::at(const std::string& name) const {
  const auto it = entries_.find(name);
  if (it == entries_.end()) throw std::runtime_error("tensor '" + name + "' not found");
  return it->second;
}

std::vector<float> SafetensorsFile::to_float(const std::string& name) const {
  return convert<float>(at(name));
}

std::vector<double> SafetensorsFile::to_double(const std::string& name) const {
  return convert<double>(at(name));
}

void write_safetensors(const std::filesystem::path& path, const std::vector<TensorToWrite>& tensors,
                       const std::map<std::string, std::string>& metadata) {
  std::map<std::string, const TensorToWrite*> ordered;
  for (const auto& t : tensors) ordered[t.name] = &t;

  nlohmann::ordered_json header;
  if (!metadata.empty()) {
    nlohmann::ordered_json meta = nlohmann::ordered_json::object();
    for (const auto& [k, v] : metadata) meta[k] = v;
    header["__metadata__"] = meta;
  }
  std::uint64_t offset = 0;
  for (const auto& [name, t] : ordered) {
    std::int64_t n = 1;
    for (auto d : t->shape) n *= d;
    if (static_cast<std::size_t>(n) != t->values.size())
      throw std::runtime_error("shape/value count mismatch for tensor " + name);
    const std::uint64_t bytes = t->values.size() * 8;
    header[name] = {{"dtype", "F64"}, {"shape", t->shape}, {"data_offsets", {offset, offset + bytes}}};
    offset += bytes;
  }
  std::string text = header.dump();
  while (text.size() % 8) text.push_back(' ');

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  const std::uint64_t len = text.size();
  out.write(reinterpret_cast<const char*>(&len), 8);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& [name, t] : ordered)
    out.write(reinterpret_cast<const char*>(t->values.data()),
              static_cast<std::streamsize>(t->values.size() * 8));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace baved
