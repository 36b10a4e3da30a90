#pragma once

namespace sigforecast {

// Number of worker threads used by the kernels. Honours the
// SIGFORECAST_THREADS environment variable as an upper bound.
int thread_count();

// Caps the worker count for the rest of the process (values < 1 reset to the
// environment / OpenMP default).
void set_thread_cap(int threads);

}  // namespace sigforecast
