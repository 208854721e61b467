// Copyright 2026 The SUIN Authors
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

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "suin/tensor.hpp"

namespace suin {

enum class DType : std::uint8_t { kFloat64 = 1, kInt64 = 2 };

// Named collection of tensors stored in one little-endian binary file.
//
//   file    := "SUINTA01" u32(count) entry*
//   entry   := u32(name_len) name
//              "SUTN" u8(dtype) u8(ndim) u16(0) u64(dim)*ndim value*
//
// dtype 1 is IEEE-754 float64, dtype 2 is two's-complement int64. Entries
// are written in name order, so equal archives produce identical bytes.
class TensorArchive {
 public:
  void put(const std::string& name, const Tensor& tensor);
  void put_ints(const std::string& name, Shape shape, std::vector<std::int64_t> values);

  bool has(const std::string& name) const { return entries_.count(name) != 0; }
  // Leaf tensor with requires_grad as given.
  Tensor tensor(const std::string& name, bool requires_grad = false) const;
  const std::vector<std::int64_t>& ints(const std::string& name) const;
  const Shape& shape(const std::string& name) const;
  std::vector<std::string> names() const;

  void write(const std::filesystem::path& path) const;
  static TensorArchive read(const std::filesystem::path& path);

 private:
  struct Entry {
    DType dtype = DType::kFloat64;
    Shape shape;
    std::vector<double> f64;
    std::vector<std::int64_t> i64;
  };
  const Entry& entry(const std::string& name) const;
  std::map<std::string, Entry> entries_;
};

}  // namespace suin
