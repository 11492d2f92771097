#include "regionsel/parallel.hpp"

#include <omp.h>

#include <cstdlib>
#include <string>

namespace regionsel {

namespace {

int initial_jobs() {
  if (const char* env = std::getenv("REGIONSEL_JOBS")) {
    try {
      int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
  }
  return omp_get_max_threads();
}

int& jobs_slot() {
  static int n = initial_jobs();
  return n;
}

}  // namespace

int jobs() { return jobs_slot(); }

void set_jobs(int n) { jobs_slot() = n < 1 ? 1 : n; }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  std::vector<std::exception_ptr> errors(n);
  const long long count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 1) num_threads(jobs())
  for (long long i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace regionsel
