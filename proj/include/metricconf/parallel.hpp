#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace metricconf {

// Runs fn(i) for i in [0, count) over `threads` workers in contiguous
// blocks. Each index owns its output slot and random stream, so results do
// not depend on the schedule; threads <= 1 degenerates to a plain loop.
template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
    if (threads <= 1 || count < 2) {
        for (std::size_t i = 0; i < count; ++i)
            fn(i);
        return;
    }
    const std::size_t workers = std::min<std::size_t>(threads, count);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (count + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(begin + chunk, count);
        if (begin >= end)
            break;
        pool.emplace_back([begin, end, &fn] {
            for (std::size_t i = begin; i < end; ++i)
                fn(i);
        });
    }
    for (auto& t : pool)
        t.join();
}

} // namespace metricconf
