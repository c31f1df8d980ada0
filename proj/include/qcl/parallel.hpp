#pragma once

#include <cstddef>
#include <functional>

namespace qcl {

/// Worker cap for library-level parallel loops. Defaults to QCL_THREADS when set,
/// otherwise std::thread::hardware_concurrency().
int thread_count();
void set_thread_count(int n);

/// Runs body(i) for i in [0, n). Each index is handled exactly once, so writing
/// results into slot i keeps the output independent of scheduling. Nested calls
/// run serially on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

/// Seed for the i-th independent stream derived from a base seed (stream 0 is the base).
unsigned long long derive_seed(unsigned long long base, std::size_t stream);

}  // namespace qcl
