// Copyright 2026 The poa-lab Authors
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

#pragma once

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace poa {

/// Worker count: POA_LAB_THREADS if set and positive, else `fallback`,
/// else the hardware concurrency.
inline int thread_count(int fallback = 0) {
  if (const char* env = std::getenv("POA_LAB_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<int>(v);
  }
  if (fallback > 0) return fallback;
  return std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
}

/// Runs fn(index) for index in [0, count) on `threads` workers. Indices are
/// split into contiguous blocks, so callers that write results by index get
/// the same output for any thread count. The first exception is rethrown.
template <typename Fn>
void parallel_for(long count, Fn&& fn, int threads) {
  if (count <= 0) return;
  threads = std::max(1, std::min<int>(threads, static_cast<int>(std::min<long>(count, 1 << 16))));
  if (threads == 1) {
    for (long i = 0; i < count; ++i) fn(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  const long block = (count + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const long begin = t * block;
    const long end = std::min(count, begin + block);
    if (begin >= end) break;
    pool.emplace_back([&, begin, end] {
      try {
        for (long i = begin; i < end; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace poa
