/*
   Copyright 2026 The samplab authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/
#pragma once

#include <array>
#include <cstdint>
#include <utility>

#include "samplab/linalg.hpp"

namespace samplab::rng {

/// One 256-bit Philox output block: four little-endian 64-bit words.
struct Block {
    std::array<std::uint64_t, 4> w;
};

/**
 * Raw Philox4x64 keyed permutation, 10 rounds.
 *
 * Counter-based: the output is a pure function of (counter, key), so any
 * block of any stream can be regenerated in isolation.  Constants match the
 * reference implementation shipped with numpy, which the known-answer tests
 * are generated from.
 */
Block philox4x64(const std::array<std::uint64_t, 4>& counter,
                 const std::array<std::uint64_t, 2>& key);

/**
 * A deterministic random stream addressed by (master_seed, stream_id).
 *
 * The Philox key is {master_seed, 0} and the counter block is
 * {block_counter, 0, stream_id, 0}; block_counter starts at 0 and increases
 * by one per consumed block.  Streams with distinct ids never overlap, and a
 * stream's sequence depends only on its address, never on what other streams
 * consumed — which is what makes per-path streams reproducible under any
 * parallel schedule.
 *
 * Draw accounting (documented so consumption is auditable):
 *   - uniform01()               consumes 1 block (uses word 0)
 *   - next_u64()                consumes 1 block (uses word 0)
 *   - standard_normal()         consumes 1 block (first of a Box–Muller pair)
 *   - standard_normal_pair()    consumes 1 block (words 0 and 1)
 *   - fill_standard_normal(n)   consumes ceil(n/2) blocks
 *   - standard_normal_vector(d) consumes ceil(d/2) blocks
 *   - uniform_below(b)          consumes >= 1 blocks (unbiased rejection)
 *
 * Uniforms map a 64-bit word w to ((w >> 11) + 1) * 2^-53, which lies in
 * (0, 1] — zero never occurs, so log(u) is always finite.
 */
class Stream {
public:
    Stream(std::uint64_t master_seed, std::uint64_t stream_id,
           std::uint64_t block_counter = 0);

    std::uint64_t master_seed() const { return key_[0]; }
    std::uint64_t stream_id() const { return stream_id_; }
    std::uint64_t block_counter() const { return counter_; }

    /// Next raw block (advances the counter by one).
    Block next_block();

    /// Uniform double in (0, 1].
    double uniform01();

    /// Raw 64-bit word (word 0 of the next block).
    std::uint64_t next_u64();

    /// Uniform integer in [0, bound) via rejection; bound must be > 0.
    std::uint64_t uniform_below(std::uint64_t bound);

    /// One standard normal (Box–Muller; the sine partner is discarded).
    double standard_normal();

    /// Two independent standard normals from one block.
    std::pair<double, double> standard_normal_pair();

    /// Fill out[0..n) with independent standard normals; n must be >= 0.
    void fill_standard_normal(double* out, int n);

    /// d-dimensional standard normal vector; d must be in [1, kMaxDim].
    Vec standard_normal_vector(int d);

    /// Advance the counter by n blocks without generating output.
    void skip_blocks(std::uint64_t n) { counter_ += n; }

private:
    std::array<std::uint64_t, 2> key_;
    std::uint64_t stream_id_;
    std::uint64_t counter_;
};

/**
 * Reserved stream ids for named roles, far above any per-path id (path p
 * uses stream id p; path counts stay below 2^40 by a wide margin).
 */
namespace roles {
inline constexpr std::uint64_t kPermutation = (1ull << 62) + 1;
inline constexpr std::uint64_t kSubsample = (1ull << 62) + 2;
inline constexpr std::uint64_t kQuadratureMc = (1ull << 62) + 3;
} // namespace roles

} // namespace samplab::rng
