#include "jkoflow/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace jkoflow {
namespace {

std::size_t default_jobs() {
  if (const char* env = std::getenv("JKO_FLOW_JOBS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<std::size_t>(v);
    } catch (...) {
    }
  }
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

std::atomic<std::size_t>& jobs_setting() {
  static std::atomic<std::size_t> jobs{default_jobs()};
  return jobs;
}

// Nested sections run inline on the worker that reached them.
thread_local bool t_in_worker = false;

}  // namespace

std::size_t max_jobs() { return jobs_setting().load(); }

void set_max_jobs(std::size_t jobs) { jobs_setting().store(std::max<std::size_t>(1, jobs)); }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = t_in_worker ? 1 : std::min(n, max_jobs());
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  auto run_chunk = [&](std::size_t w) {
    const bool outer = t_in_worker;
    t_in_worker = true;
    const std::size_t begin = n * w / workers;
    const std::size_t end = n * (w + 1) / workers;
    for (std::size_t i = begin; i < end; ++i) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
        break;
      }
    }
    t_in_worker = outer;
  };
  std::vector<std::thread> threads;
  threads.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) threads.emplace_back(run_chunk, w);
  run_chunk(0);
  for (auto& t : threads) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace jkoflow
