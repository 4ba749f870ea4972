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

namespace spdq {

/// Worker-thread budget: min(omp_get_max_threads(), SPDQ_THREADS).
/// Parallel kernels only distribute loop iterations with disjoint writes, or
/// reduce thread partials in a fixed order, so results never depend on the
/// thread count.
int max_threads();

/// Applies the SPDQ_THREADS cap to the OpenMP runtime. Called once from every
/// executable entry point.
void apply_thread_cap();

}  // namespace spdq
