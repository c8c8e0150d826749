#include "udfmesh/threads.hpp"

#include <atomic>

namespace udfmesh {

namespace {
std::atomic<int> g_default_threads{1};
}

int default_threads() { return g_default_threads.load(std::memory_order_relaxed); }

void set_default_threads(int n) { g_default_threads.store(n < 1 ? 1 : n, std::memory_order_relaxed); }

int hardware_threads() {
    const unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : static_cast<int>(n);
}

} // namespace udfmesh
