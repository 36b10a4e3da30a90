#pragma once

#include <cstddef>
#include <new>

namespace sigforecast {

struct MemoryStats {
  std::size_t current_bytes = 0;
  std::size_t peak_bytes = 0;
};

// Byte counters for array storage allocated through TrackingAllocator.
MemoryStats memory_stats();
// Resets the peak to the current level.
void reset_peak_memory();

namespace detail {
void record_allocation(std::size_t bytes);
void record_deallocation(std::size_t bytes);
}  // namespace detail

// std::allocator replacement that feeds the counters above. Used for the
// large numeric buffers so that benchmarks can report their peak footprint.
template <class T>
struct TrackingAllocator {
  using value_type = T;

  TrackingAllocator() noexcept = default;
  template <class U>
  TrackingAllocator(const TrackingAllocator<U>&) noexcept {}

  // Cache-line alignment keeps vectorised reductions over mapped storage
  // independent of where the heap happens to place a buffer.
  static constexpr std::align_val_t kAlignment{64};

  T* allocate(std::size_t n) {
    auto* p = static_cast<T*>(::operator new(n * sizeof(T), kAlignment));
    detail::record_allocation(n * sizeof(T));
    return p;
  }
  void deallocate(T* p, std::size_t n) noexcept {
    detail::record_deallocation(n * sizeof(T));
    ::operator delete(p, kAlignment);
  }

  template <class U>
  bool operator==(const TrackingAllocator<U>&) const noexcept {
    return true;
  }
};

}  // namespace sigforecast
