// Copyright 2026 The samplab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Internal deterministic path-parallel driver.  Work is split into fixed
// chunks claimed through an atomic cursor; each path writes only its own
// disjoint output, so results are bitwise independent of the worker count.

#ifndef SAMPLAB_SRC_PARALLEL_HPP_
#define SAMPLAB_SRC_PARALLEL_HPP_

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <mutex>
#include <thread>
#include <vector>

#include "samplab/errors.hpp"

namespace samplab::detail {

inline constexpr std::int64_t kChunkPaths = 4096;

/// Run body(p) for p in [0, paths); body returns false to mark the path
/// failed.  Returns the sorted list of failed path indices.
template <typename Body>
std::vector<std::int64_t> run_paths(std::int64_t paths, int workers,
                                    Body&& body) {
    if (paths < 1) {
        throw ConfigError("simulation requires paths >= 1");
    }
    if (workers < 1) {
        throw ConfigError("simulation requires workers >= 1");
    }
    std::vector<std::int64_t> failed;
    std::mutex failed_mutex;
    const std::int64_t chunks = (paths + kChunkPaths - 1) / kChunkPaths;
    std::atomic<std::int64_t> cursor{0};

    auto drain = [&]() {
        std::vector<std::int64_t> local_failed;
        for (;;) {
            const std::int64_t c = cursor.fetch_add(1);
            if (c >= chunks) {
                break;
            }
            const std::int64_t lo = c * kChunkPaths;
            const std::int64_t hi = std::min(paths, lo + kChunkPaths);
            for (std::int64_t p = lo; p < hi; ++p) {
                if (!body(p)) {
                    local_failed.push_back(p);
                }
            }
        }
        if (!local_failed.empty()) {
            std::lock_guard<std::mutex> lock(failed_mutex);
            failed.insert(failed.end(), local_failed.begin(),
                          local_failed.end());
        }
    };

    const int nthreads = static_cast<int>(
        std::min<std::int64_t>(workers, chunks));
    if (nthreads <= 1) {
        drain();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(nthreads));
        for (int w = 0; w < nthreads; ++w) {
            pool.emplace_back(drain);
        }
        for (auto& t : pool) {
            t.join();
        }
    }
    std::sort(failed.begin(), failed.end());
    return failed;
}

} // namespace samplab::detail

#endif // SAMPLAB_SRC_PARALLEL_HPP_
