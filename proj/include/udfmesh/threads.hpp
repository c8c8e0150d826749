#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace udfmesh {

// Process-wide default worker count. 1 keeps everything on the calling
// thread. All parallel loops in this codebase partition work so that each
// output element is produced by exactly one worker with a fixed operation
// order, so results are bit-identical for any thread count.
int default_threads();
void set_default_threads(int n);
int hardware_threads();

// Runs fn(begin, end) over a partition of [0, n). threads == 0 uses the
// process default.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
    if (threads <= 0) threads = default_threads();
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
    if (workers <= 1) {
        if (n > 0) fn(std::size_t{0}, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t b = w * chunk;
        const std::size_t e = std::min(n, b + chunk);
        if (b >= e) break;
        pool.emplace_back([&fn, b, e] { fn(b, e); });
    }
    for (auto& t : pool) t.join();
}

} // namespace udfmesh
