#include "filtlab/parallel.hpp"

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace filtlab {

unsigned resolve_workers(unsigned workers) {
    if (workers != 0) return workers;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

void parallel_for(std::size_t n, unsigned workers,
                  const std::function<void(std::size_t, std::size_t)>& body) {
    if (n == 0) return;
    const unsigned w = static_cast<unsigned>(
        std::min<std::size_t>(resolve_workers(workers), n));
    if (w <= 1) {
        body(0, n);
        return;
    }
    std::vector<std::thread> threads;
    threads.reserve(w);
    std::exception_ptr first_error;
    std::mutex error_mutex;
    const std::size_t chunk = (n + w - 1) / w;
    for (unsigned i = 0; i < w; ++i) {
        const std::size_t begin = std::min(n, static_cast<std::size_t>(i) * chunk);
        const std::size_t end = std::min(n, begin + chunk);
        if (begin == end) break;
        threads.emplace_back([&, begin, end] {
            try {
                body(begin, end);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& t : threads) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace filtlab
