#include "sigforecast/memory.hpp"

#include <atomic>

namespace sigforecast {
namespace {
std::atomic<std::size_t> g_current{0};
std::atomic<std::size_t> g_peak{0};
}  // namespace

MemoryStats memory_stats() { return {g_current.load(), g_peak.load()}; }

void reset_peak_memory() { g_peak.store(g_current.load()); }

namespace detail {

void record_allocation(std::size_t bytes) {
  const std::size_t now = g_current.fetch_add(bytes) + bytes;
  std::size_t peak = g_peak.load();
  while (now > peak && !g_peak.compare_exchange_weak(peak, now)) {
  }
}

void record_deallocation(std::size_t bytes) { g_current.fetch_sub(bytes); }

}  // namespace detail
}  // namespace sigforecast
