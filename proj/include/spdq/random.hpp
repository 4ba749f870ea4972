// Copyright 2026-present the spdq project
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
#include <random>

#include "spdq/matrix.hpp"

namespace spdq {

/// splitmix64 step; used to derive stable per-purpose / per-item sub-seeds
/// from one run seed, independent of thread scheduling.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

Matrix random_gaussian(std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                       double stddev = 1.0);
Matrix random_uniform(std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                      double lo, double hi);

/// Random C with orthonormal rows (rows <= cols), built by Gram-Schmidt over
/// Gaussian draws.
Matrix random_row_orthonormal(std::size_t rows, std::size_t cols, std::mt19937_64& rng);

}  // namespace spdq
