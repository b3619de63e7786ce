// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace crag {

/// Runs fn(i) for i in [0, count) on at most `limit` threads (0 = one thread per item).
/// Every item runs even if some throw; afterwards the exception of the lowest failing
/// index is rethrown, so failure reporting does not depend on scheduling.
template <typename Fn>
void parallel_for_bounded(std::size_t count, std::size_t limit, Fn&& fn) {
    if (count == 0) {
        return;
    }
    const std::size_t workers = limit == 0 ? count : std::min(limit, count);
    std::vector<std::exception_ptr> errors(count);
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < count; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        }
        pool.clear();
    }
    for (const auto& error : errors) {
        if (error) {
            std::rethrow_exception(error);
        }
    }
}

}  // namespace crag
