// Copyright 2026 The Tsallis FPD Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Minimal deterministic fork-join helper. Each index is processed exactly
// once and writes only its own slot, so results never depend on scheduling.

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace tsallis_fpd {

inline constexpr const char* kThreadsEnvVar = "TSALLIS_FPD_THREADS";

// Worker cap from TSALLIS_FPD_THREADS; unset, 0 or unparsable means one per
// hardware thread.
inline std::size_t worker_count() {
  std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
  const char* env = std::getenv(kThreadsEnvVar);
  if (env == nullptr || *env == '\0') return hw;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || v <= 0) return hw;
  return static_cast<std::size_t>(v);
}

// Calls body(i) for i in [0, count). If any call throws, the exception of the
// lowest failing index is rethrown after all workers finish.
template <class Body>
void parallel_for(std::size_t count, Body&& body) {
  const std::size_t workers = std::min(worker_count(), count);
  std::vector<std::exception_ptr> errors(count);
  auto run = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t i = begin; i < count; i += stride) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    run(0, 1);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run, w, workers);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace tsallis_fpd
