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
#include <vector>

#include "suin/tensor.hpp"

namespace suin {

struct NamedParam {
  std::string name;
  Tensor tensor;
};

using ParamList = std::vector<NamedParam>;

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction. Moments are allocated lazily per parameter on
// the first step and keyed by position in the parameter list.
class Adam {
 public:
  explicit Adam(ParamList params, AdamConfig config = {});

  // Applies one update from the accumulated gradients. Parameters that are
  // frozen or received no gradient are skipped. Throws DivergenceError
  // naming the parameter if any gradient is non-finite; no parameter is
  // modified in that case.
  void step();
  void zero_grad();

  long long steps() const { return t_; }
  const AdamConfig& config() const { return config_; }

 private:
  ParamList params_;
  AdamConfig config_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  long long t_ = 0;
};

}  // namespace suin
