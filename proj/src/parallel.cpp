#include "selmut/parallel.hpp"

#include <oneapi/tbb/blocked_range.h>
#include <oneapi/tbb/global_control.h>
#include <oneapi/tbb/parallel_for.h>
#include <oneapi/tbb/partitioner.h>
#include <oneapi/tbb/task_arena.h>

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>

namespace selmut {

namespace {

tbb::task_arena& arena_for(int workers) {
    static std::mutex mutex;
    static std::map<int, std::unique_ptr<tbb::task_arena>> arenas;
    static std::unique_ptr<tbb::global_control> allowance;
    static int allowed = 0;
    std::lock_guard lock(mutex);
    // Honour explicit worker counts above the hardware concurrency.
    if (workers > allowed) {
        allowance = std::make_unique<tbb::global_control>(tbb::global_control::max_allowed_parallelism,
                                                          static_cast<std::size_t>(workers));
        allowed = workers;
    }
    auto& slot = arenas[workers];
    if (!slot) slot = std::make_unique<tbb::task_arena>(workers);
    return *slot;
}

}  // namespace

void parallel_for(std::size_t n, int workers,
                  const std::function<void(std::size_t, std::size_t)>& body) {
    if (n == 0) return;
    // Small maps are not worth a task dispatch.
    if (workers <= 1 || n < 256) {
        body(0, n);
        return;
    }
    const std::size_t grain = std::max<std::size_t>(64, n / (8 * static_cast<std::size_t>(workers)));
    arena_for(workers).execute([&] {
        tbb::parallel_for(
            tbb::blocked_range<std::size_t>(0, n, grain),
            [&](const tbb::blocked_range<std::size_t>& r) { body(r.begin(), r.end()); },
            tbb::simple_partitioner());
    });
}

}  // namespace selmut
