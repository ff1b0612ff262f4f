#pragma once

#include <functional>
#include <thread>
#include <vector>

namespace pclab {

// Splits [0, n) into `chunks` contiguous ranges and runs fn(chunk, begin, end)
// on each, one thread per chunk (inline when chunks == 1). Callers own any
// reduction; summing per-chunk results in chunk order keeps runs reproducible
// for a fixed chunk count.
inline void parallel_chunks(int n, int chunks,
                            const std::function<void(int, int, int)>& fn) {
    if (n <= 0) return;
    if (chunks <= 1) {
        fn(0, 0, n);
        return;
    }
    if (chunks > n) chunks = n;
    const int base = n / chunks;
    const int extra = n % chunks;
    std::vector<std::thread> workers;
    workers.reserve(static_cast<std::size_t>(chunks));
    int begin = 0;
    for (int c = 0; c < chunks; ++c) {
        const int len = base + (c < extra ? 1 : 0);
        const int end = begin + len;
        workers.emplace_back([&fn, c, begin, end] { fn(c, begin, end); });
        begin = end;
    }
    for (auto& w : workers) w.join();
}

}  // namespace pclab
