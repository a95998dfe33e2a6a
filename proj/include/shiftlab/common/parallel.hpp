// Copyright 2026 The shiftlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace shiftlab {

/// Runs fn(i) for i in [0, n) on up to `workers` threads using contiguous
/// blocks. The first exception thrown by any worker is rethrown.
template <typename Fn>
void parallel_for(size_t n, unsigned workers, Fn&& fn) {
  workers = std::max(1U, workers);
  if (workers == 1 || n < 2) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const size_t w = std::min<size_t>(workers, n);
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> threads;
  threads.reserve(w);
  for (size_t t = 0; t < w; ++t) {
    threads.emplace_back([&, t] {
      const size_t begin = n * t / w;
      const size_t end = n * (t + 1) / w;
      try {
        for (size_t i = begin; i < end; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& th : threads) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace shiftlab
