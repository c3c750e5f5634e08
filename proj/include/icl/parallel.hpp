#ifndef ICL_PARALLEL_HPP_
#define ICL_PARALLEL_HPP_

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace icl
{
    // Runs fn(i) for i in [0, n) on at most `jobs` threads. The first exception is rethrown.
    inline void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn)
    {
        std::size_t workers = std::min<std::size_t>(n, jobs > 1 ? static_cast<std::size_t>(jobs) : 1);
        if (workers <= 1)
        {
            for (std::size_t i = 0; i < n; ++i)
                fn(i);
            return;
        }
        std::atomic<std::size_t> next{0};
        std::exception_ptr error;
        std::mutex error_mutex;
        std::vector<std::thread> threads;
        for (std::size_t w = 0; w < workers; ++w)
            threads.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++)
                {
                    try
                    {
                        fn(i);
                    }
                    catch (...)
                    {
                        std::lock_guard lock(error_mutex);
                        if (!error)
                            error = std::current_exception();
                    }
                }
            });
        for (auto& t : threads)
            t.join();
        if (error)
            std::rethrow_exception(error);
    }
}  // namespace icl

#endif  // ICL_PARALLEL_HPP_
