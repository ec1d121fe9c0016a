#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace obatalab {

/// Worker count from OBATALAB_THREADS (positive integer), else the hardware concurrency.
inline std::size_t worker_count() {
    if (const char* env = std::getenv("OBATALAB_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
    }
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

/// out[i] = f(in[i]) on a bounded pool. Output order follows input order; the first
/// exception (lowest index) is rethrown after all workers finish.
template <class T, class F>
auto parallel_map(const std::vector<T>& in, F&& f, std::size_t workers = worker_count())
    -> std::vector<decltype(f(in.front()))> {
    using R = decltype(f(in.front()));
    std::vector<std::optional<R>> slots(in.size());
    std::vector<std::exception_ptr> errors(in.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < in.size(); i = next++) {
            try {
                slots[i].emplace(f(in[i]));
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    workers = std::min(workers, in.size());
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    std::vector<R> out;
    out.reserve(in.size());
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

}  // namespace obatalab
