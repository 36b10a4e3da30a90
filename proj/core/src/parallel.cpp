#include "sigforecast/parallel.hpp"

#include <omp.h>

#include <algorithm>
#include <cstdlib>
#include <string>

namespace sigforecast {
namespace {

int env_cap() {
  const char* raw = std::getenv("SIGFORECAST_THREADS");
  if (raw == nullptr) return 0;
  try {
    return std::max(0, std::stoi(raw));
  } catch (...) {
    return 0;
  }
}

int g_cap = -1;  // -1: not yet initialised

}  // namespace

int thread_count() {
  if (g_cap < 0) g_cap = env_cap();
  const int available = omp_get_max_threads();
  return g_cap > 0 ? std::min(g_cap, available) : available;
}

void set_thread_cap(int threads) {
  const int env = env_cap();
  if (threads < 1) {
    g_cap = env;
  } else {
    g_cap = env > 0 ? std::min(env, threads) : threads;
  }
  omp_set_num_threads(g_cap > 0 ? g_cap : omp_get_num_procs());
}

}  // namespace sigforecast
