#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <optional>
#include <thread>
#include <vector>

namespace foliated {

/// `--threads` value, else FOLIATED_THREADS, else the hardware concurrency.
std::size_t resolve_thread_count(std::optional<std::size_t> requested = std::nullopt);

/*!
 * Run fn(i) for i in [0, n) on up to `threads` workers.
 *
 * Work items must write only to their own slot; callers reduce afterwards in
 * index order, so results do not depend on the thread count. If several items
 * throw, the exception of the lowest index is rethrown.
 */
template<class Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn)
{
    threads = std::max<std::size_t>(1, std::min(threads, n));
    if (threads == 1)
    {
        for (std::size_t i = 0; i < n; ++i)
            fn(i);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(n);
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++)
        {
            try
            {
                fn(i);
            }
            catch (...)
            {
                errors[i] = std::current_exception();
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (std::size_t t = 0; t < threads; ++t)
            pool.emplace_back(worker);
    }
    for (auto const& e : errors)
        if (e)
            std::rethrow_exception(e);
}

}  // namespace foliated
