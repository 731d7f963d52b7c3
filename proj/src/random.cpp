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

#include "samlp/random.hpp"

#include <algorithm>
#include <numeric>

#include "samlp/errors.hpp"

namespace samlp {

double sample_beta(double a, double b, Rng& rng) {
  if (!(a > 0.0) || !(b > 0.0)) throw ConfigError("Beta shape parameters must be positive");
  std::gamma_distribution<double> ga(a, 1.0);
  std::gamma_distribution<double> gb(b, 1.0);
  const double x = ga(rng);
  const double y = gb(rng);
  // Both draws can underflow to zero for very small shapes.
  if (x + y <= 0.0) return 0.5;
  return x / (x + y);
}

std::vector<Index> random_permutation(std::size_t n, Rng& rng) {
  std::vector<Index> perm(n);
  std::iota(perm.begin(), perm.end(), Index{0});
  // Explicit Fisher-Yates so the stream consumption does not depend on the
  // standard library's shuffle.
  for (std::size_t i = n; i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(perm[i - 1], perm[pick(rng)]);
  }
  return perm;
}

}  // namespace samlp
