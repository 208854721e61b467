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

#include "suin/tensor_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "suin/errors.hpp"

namespace suin {

namespace {

constexpr char kFileMagic[8] = {'S', 'U', 'I', 'N', 'T', 'A', '0', '1'};
constexpr char kEntryMagic[4] = {'S', 'U', 'T', 'N'};

void put_le(std::ostream& os, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_le(std::istream& is, int bytes, const std::filesystem::path& path) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) {
    const int c = is.get();
    if (c == EOF) throw IoError(path.string() + ": truncated tensor archive");
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return v;
}

void expect_bytes(std::istream& is, const char* magic, std::size_t n,
                  const std::filesystem::path& path) {
  char buf[8];
  is.read(buf, static_cast<std::streamsize>(n));
  if (!is || std::memcmp(buf, magic, n) != 0) {
    throw IoError(path.string() + ": bad magic, not a tensor archive");
  }
}

}  // namespace

void TensorArchive::put(const std::string& name, const Tensor& tensor) {
  Entry e;
  e.dtype = DType::kFloat64;
  e.shape = tensor.shape();
  e.f64.assign(tensor.data().begin(), tensor.data().end());
  entries_[name] = std::move(e);
}

void TensorArchive::put_ints(const std::string& name, Shape shape,
                             std::vector<std::int64_t> values) {
  if (shape_numel(shape) != values.size()) {
    throw DimensionError("archive entry '" + name + "': " + std::to_string(values.size()) +
                         " values for shape " + shape_str(shape));
  }
  Entry e;
  e.dtype = DType::kInt64;
  e.shape = std::move(shape);
  e.i64 = std::move(values);
  entries_[name] = std::move(e);
}

const TensorArchive::Entry& TensorArchive::entry(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw IoError("tensor archive has no entry '" + name + "'");
  return it->second;
}

Tensor TensorArchive::tensor(const std::string& name, bool requires_grad) const {
  const auto& e = entry(name);
  if (e.dtype != DType::kFloat64) throw IoError("entry '" + name + "' is not float64");
  return Tensor::from_data(e.shape, e.f64, requires_grad);
}

const std::vector<std::int64_t>& TensorArchive::ints(const std::string& name) const {
  const auto& e = entry(name);
  if (e.dtype != DType::kInt64) throw IoError("entry '" + name + "' is not int64");
  return e.i64;
}

const Shape& TensorArchive::shape(const std::string& name) const { return entry(name).shape; }

std::vector<std::string> TensorArchive::names() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : entries_) out.push_back(k);
  return out;
}

void TensorArchive::write(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os.write(kFileMagic, sizeof(kFileMagic));
  put_le(os, entries_.size(), 4);
  for (const auto& [name, e] : entries_) {
    put_le(os, name.size(), 4);
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    os.write(kEntryMagic, sizeof(kEntryMagic));
    put_le(os, static_cast<std::uint8_t>(e.dtype), 1);
    put_le(os, e.shape.size(), 1);
    put_le(os, 0, 2);
    for (auto d : e.shape) put_le(os, d, 8);
    if (e.dtype == DType::kFloat64) {
      for (double x : e.f64) put_le(os, std::bit_cast<std::uint64_t>(x), 8);
    } else {
      for (auto x : e.i64) put_le(os, static_cast<std::uint64_t>(x), 8);
    }
  }
  if (!os) throw IoError("write failed for " + path.string());
}

TensorArchive TensorArchive::read(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  expect_bytes(is, kFileMagic, sizeof(kFileMagic), path);
  TensorArchive out;
  const auto count = get_le(is, 4, path);
  for (std::uint64_t n = 0; n < count; ++n) {
    const auto name_len = get_le(is, 4, path);
    std::string name(name_len, '\0');
    is.read(name.data(), static_cast<std::streamsize>(name_len));
    expect_bytes(is, kEntryMagic, sizeof(kEntryMagic), path);
    Entry e;
    const auto dtype = get_le(is, 1, path);
    if (dtype != 1 && dtype != 2) {
      throw IoError(path.string() + ": unknown dtype " + std::to_string(dtype));
    }
    e.dtype = static_cast<DType>(dtype);
    const auto ndim = get_le(is, 1, path);
    get_le(is, 2, path);
    for (std::uint64_t i = 0; i < ndim; ++i) e.shape.push_back(get_le(is, 8, path));
    const auto numel = shape_numel(e.shape);
    if (e.dtype == DType::kFloat64) {
      e.f64.resize(numel);
      for (auto& x : e.f64) x = std::bit_cast<double>(get_le(is, 8, path));
    } else {
      e.i64.resize(numel);
      for (auto& x : e.i64) x = static_cast<std::int64_t>(get_le(is, 8, path));
    }
    out.entries_[name] = std::move(e);
  }
  return out;
}

}  // namespace suin
