#ifndef LINKCERT_PARALLEL_HPP
#define LINKCERT_PARALLEL_HPP

#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace linkcert {

/// Worker count resolution: explicit width if positive, else the
/// LINKCERT_JOBS environment variable, else 1. Results never depend on the
/// width — parallel_map joins results in index order and every work item
/// must draw randomness only from its own pre-split stream.
inline unsigned resolve_jobs(unsigned width) {
    if (width >= 1) return width;
    if (const char* env = std::getenv("LINKCERT_JOBS")) {
        long v = std::strtol(env, nullptr, 10);
        if (v >= 1 && v <= 256) return static_cast<unsigned>(v);
    }
    return 1;
}

/// Apply fn(i) for i in [0, count) and collect the results in index order.
/// fn must be safe to run concurrently for distinct indices.
template <typename Result, typename Fn>
std::vector<Result> parallel_map(std::size_t count, unsigned jobs, Fn&& fn) {
    std::vector<Result> out(count);
    if (count == 0) return out;
    jobs = resolve_jobs(jobs);
    if (jobs <= 1 || count == 1) {
        for (std::size_t i = 0; i < count; ++i) out[i] = fn(i);
        return out;
    }
    if (jobs > count) jobs = static_cast<unsigned>(count);
    std::vector<std::exception_ptr> errors(jobs);
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (unsigned w = 0; w < jobs; ++w) {
        pool.emplace_back([&, w]() {
            try {
                for (std::size_t i = w; i < count; i += jobs) out[i] = fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

} // namespace linkcert

#endif
