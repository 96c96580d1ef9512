#include "fkent/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace fkent {

namespace {

std::atomic<std::size_t> forced_workers{0};
thread_local bool inside_parallel = false;

}  // namespace

std::size_t worker_count() {
  if (std::size_t forced = forced_workers.load(); forced != 0) {
    return forced;
  }
  if (const char* env = std::getenv("FKENT_THREADS"); env != nullptr) {
    try {
      long v = std::stol(env);
      if (v > 0) {
        return static_cast<std::size_t>(v);
      }
    } catch (const std::exception&) {
      // fall through to the hardware default
    }
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

void set_worker_count(std::size_t workers) { forced_workers.store(workers); }

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
  std::size_t workers = std::min(worker_count(), count);
  if (inside_parallel || workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      body(i);
    }
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto run = [&] {
    inside_parallel = true;
    while (true) {
      std::size_t i = next.fetch_add(1);
      if (i >= count) {
        break;
      }
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) {
          failure = std::current_exception();
        }
        next.store(count);
      }
    }
    inside_parallel = false;
  };

  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) {
    pool.emplace_back(run);
  }
  run();
  for (auto& t : pool) {
    t.join();
  }
  if (failure) {
    std::rethrow_exception(failure);
  }
}

}  // namespace fkent
