#pragma once

#include <cstddef>
#include <functional>

namespace ailurus {

// Number of worker threads to use. Defaults to hardware_concurrency,
// capped by the AILURUS_THREADS environment variable when set.
int default_thread_count();

// Runs fn(i) for i in [0, n). Each index must write only its own slots;
// results are then independent of the schedule.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  int threads = 0);

}  // namespace ailurus
