#pragma once

#include <algorithm>
#include <functional>
#include <thread>
#include <vector>

namespace torsotext {

/// Runs fn(i) for i in [begin, end) on up to `jobs` threads. Each index is
/// processed exactly once; callers keep determinism by writing to disjoint
/// preallocated slots.
inline void parallel_for(int begin, int end, int jobs, const std::function<void(int)>& fn) {
  const int n = end - begin;
  if (n <= 0) return;
  jobs = std::max(1, std::min(jobs, n));
  if (jobs == 1) {
    for (int i = begin; i < end; ++i) fn(i);
    return;
  }
  std::vector<std::thread> threads;
  threads.reserve(static_cast<size_t>(jobs));
  for (int t = 0; t < jobs; ++t) {
    threads.emplace_back([=, &fn] {
      for (int i = begin + t; i < end; i += jobs) fn(i);
    });
  }
  for (auto& th : threads) th.join();
}

}  // namespace torsotext
