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

#include <string>

#include "suin/optim.hpp"
#include "suin/random.hpp"
#include "suin/tensor.hpp"
#include "suin/tensor_io.hpp"

namespace suin {

// Glorot-uniform [rows x cols] matrix.
Tensor xavier(std::size_t rows, std::size_t cols, Rng& rng);
Tensor normal_table(std::size_t rows, std::size_t cols, double stddev, Rng& rng);

// Deep copy as a fresh leaf that keeps the requires_grad flag.
Tensor clone_param(const Tensor& t);

// y = x W + b with W stored [in x out]; x is [in] or [n x in].
struct Linear {
  Tensor weight;
  Tensor bias;

  static Linear create(std::size_t in, std::size_t out, Rng& rng);
  static Linear zeros(std::size_t in, std::size_t out);

  Tensor forward(const Tensor& x) const;
  std::size_t in_features() const { return weight.size(0); }
  std::size_t out_features() const { return weight.size(1); }

  void collect(ParamList& out, const std::string& prefix) const;
  void save(TensorArchive& ar, const std::string& prefix) const;
  static Linear load(const TensorArchive& ar, const std::string& prefix);
  Linear clone() const { return {clone_param(weight), clone_param(bias)}; }
};

}  // namespace suin
