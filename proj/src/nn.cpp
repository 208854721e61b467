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

#include "suin/nn.hpp"

#include <cmath>

#include "suin/errors.hpp"

namespace suin {

Tensor xavier(std::size_t rows, std::size_t cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::vector<double> v(rows * cols);
  for (auto& x : v) x = rng.uniform(-limit, limit);
  return Tensor::from_data({rows, cols}, std::move(v), true);
}

Tensor normal_table(std::size_t rows, std::size_t cols, double stddev, Rng& rng) {
  std::vector<double> v(rows * cols);
  for (auto& x : v) x = rng.normal(0.0, stddev);
  return Tensor::from_data({rows, cols}, std::move(v), true);
}

Tensor clone_param(const Tensor& t) {
  return Tensor::from_data(t.shape(), {t.data().begin(), t.data().end()}, t.requires_grad());
}

Linear Linear::create(std::size_t in, std::size_t out, Rng& rng) {
  return {xavier(in, out, rng), Tensor::zeros({out}, true)};
}

Linear Linear::zeros(std::size_t in, std::size_t out) {
  return {Tensor::zeros({in, out}, true), Tensor::zeros({out}, true)};
}

Tensor Linear::forward(const Tensor& x) const {
  if (x.dim() == 1) return add(matmul(x, weight), bias);
  if (x.dim() != 2) throw DimensionError("Linear: input must be 1-D or 2-D, got " + shape_str(x.shape()));
  return add(matmul(x, weight), expand_rows(bias, x.size(0)));
}

void Linear::collect(ParamList& out, const std::string& prefix) const {
  out.push_back({prefix + ".weight", weight});
  out.push_back({prefix + ".bias", bias});
}

void Linear::save(TensorArchive& ar, const std::string& prefix) const {
  ar.put(prefix + ".weight", weight);
  ar.put(prefix + ".bias", bias);
}

Linear Linear::load(const TensorArchive& ar, const std::string& prefix) {
  return {ar.tensor(prefix + ".weight", true), ar.tensor(prefix + ".bias", true)};
}

}  // namespace suin
