#include "uav/parallel.h"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace uav {
namespace {

int InitialThreadCount() {
  if (const char* env = std::getenv("UAV_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 0;
}

std::atomic<int>& ThreadSetting() {
  static std::atomic<int> setting{InitialThreadCount()};
  return setting;
}

}  // namespace

void SetThreadCount(int threads) { ThreadSetting() = std::max(0, threads); }

int ThreadCount() {
  const int n = ThreadSetting();
  if (n > 0) return n;
  return std::max(1u, std::thread::hardware_concurrency());
}

void ParallelFor(int n, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  const int workers = std::min(ThreadCount(), n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto body = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (int w = 1; w < workers; ++w) pool.emplace_back(body);
  body();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace uav
