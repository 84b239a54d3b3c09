#include "rareevent/parallel.hpp"

#include <omp.h>

#include <algorithm>
#include <cstdlib>
#include <string>

namespace rareevent::parallel {

int env_thread_cap() {
  const char* raw = std::getenv("RARE_EVENT_THREADS");
  if (raw == nullptr) return 0;
  try {
    const int v = std::stoi(raw);
    return v > 0 ? v : 0;
  } catch (const std::exception&) {
    return 0;
  }
}

int max_threads() {
  const int cap = env_thread_cap();
  const int n = omp_get_max_threads();
  return cap > 0 ? std::min(cap, n) : n;
}

void set_threads(int n) {
  if (n <= 0) n = omp_get_num_procs();
  const int cap = env_thread_cap();
  if (cap > 0) n = std::min(n, cap);
  omp_set_num_threads(std::max(1, n));
}

}  // namespace rareevent::parallel
