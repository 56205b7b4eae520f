#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace frisk {

namespace detail {
inline std::atomic<int>& thread_cap() {
    static std::atomic<int> cap{0};
    return cap;
}
} // namespace detail

// Process-wide worker cap, set by the CLI --threads flag. 0 means "hardware".
inline int max_threads() {
    const int cap = detail::thread_cap().load();
    if (cap > 0) return cap;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

inline void set_max_threads(int n) { detail::thread_cap().store(n); }

// Runs fn(i) for i in [0, n). Tasks are claimed from an atomic counter, so the
// execution order is unspecified; callers must write only to per-index slots.
// All reductions over the slots then happen serially in index order, which
// keeps results identical for any thread count.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    if (n == 0) return;
    const std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(max_threads()), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::atomic<bool> failed{false};
    auto body = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n || failed.load()) return;
            try {
                fn(i);
            } catch (...) {
                if (!failed.exchange(true)) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(body);
    body();
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

} // namespace frisk
