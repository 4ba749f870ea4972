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

#include "spdq/parallel.hpp"

#include <omp.h>

#include <cstdlib>
#include <string>

namespace spdq {

namespace {

int read_thread_cap() {
    const char* env = std::getenv("SPDQ_THREADS");
    if (env == nullptr) return 0;
    try {
        int v = std::stoi(env);
        return v > 0 ? v : 0;
    } catch (...) {
        return 0;
    }
}

}  // namespace

int max_threads() {
    int n = omp_get_max_threads();
    int cap = read_thread_cap();
    if (cap > 0 && cap < n) n = cap;
    return n;
}

void apply_thread_cap() {
    int cap = read_thread_cap();
    if (cap > 0) omp_set_num_threads(cap);
}

}  // namespace spdq
