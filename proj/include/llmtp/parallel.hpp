#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace llmtp {

namespace detail {
inline std::atomic<int>& thread_override() {
    static std::atomic<int> value{0};
    return value;
}
} // namespace detail

/// Caps the worker count used by `parallel_for`. Zero restores the default
/// (THREADS environment variable, else hardware concurrency).
inline void set_thread_count(int n) { detail::thread_override() = std::max(0, n); }

inline int thread_count() {
    if (int forced = detail::thread_override(); forced > 0)
        return forced;
    int hw = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    if (const char* env = std::getenv("THREADS")) {
        try {
            int cap = std::stoi(env);
            if (cap > 0)
                return std::min(cap, hw);
        } catch (const std::exception&) {
        }
    }
    return hw;
}

/// Runs fn(i) for i in [0, count). Every index is processed exactly once and
/// writes only its own outputs, so results do not depend on the worker count.
template <class Index, class F>
void parallel_for(Index count, F&& fn) {
    const int workers = std::min<long long>(thread_count(), static_cast<long long>(count));
    if (workers <= 1) {
        for (Index i = 0; i < count; ++i)
            fn(i);
        return;
    }
    std::atomic<long long> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
        std::vector<std::jthread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (long long i = next++; i < static_cast<long long>(count); i = next++) {
                    try {
                        fn(static_cast<Index>(i));
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
                        if (!failure)
                            failure = std::current_exception();
                    }
                }
            });
        }
    }
    if (failure)
        std::rethrow_exception(failure);
}

} // namespace llmtp
