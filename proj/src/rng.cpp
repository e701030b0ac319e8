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
#include "samplab/rng.hpp"

#include <cmath>
#include <numbers>

#include "samplab/errors.hpp"

namespace samplab::rng {

namespace {

// Philox4x64 round constants (multipliers and Weyl key increments).
constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ull;
constexpr std::uint64_t kMul1 = 0xCA5A826395121157ull;
constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ull;
constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73Bull;

inline void philox_round(std::array<std::uint64_t, 4>& ctr,
                         std::array<std::uint64_t, 2>& key) {
    const unsigned __int128 p0 =
        static_cast<unsigned __int128>(kMul0) * ctr[0];
    const unsigned __int128 p1 =
        static_cast<unsigned __int128>(kMul1) * ctr[2];
    const std::uint64_t hi0 = static_cast<std::uint64_t>(p0 >> 64);
    const std::uint64_t lo0 = static_cast<std::uint64_t>(p0);
    const std::uint64_t hi1 = static_cast<std::uint64_t>(p1 >> 64);
    const std::uint64_t lo1 = static_cast<std::uint64_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
}

inline double u64_to_unit(std::uint64_t w) {
    // (0, 1]: the +1 keeps zero out so log() stays finite.
    return static_cast<double>((w >> 11) + 1) * 0x1.0p-53;
}

} // namespace

Block philox4x64(const std::array<std::uint64_t, 4>& counter,
                 const std::array<std::uint64_t, 2>& key) {
    std::array<std::uint64_t, 4> ctr = counter;
    std::array<std::uint64_t, 2> k = key;
    for (int round = 0; round < 10; ++round) {
        philox_round(ctr, k);
    }
    return Block{ctr};
}

Stream::Stream(std::uint64_t master_seed, std::uint64_t stream_id,
               std::uint64_t block_counter)
    : key_{master_seed, 0}, stream_id_(stream_id), counter_(block_counter) {}

Block Stream::next_block() {
    const Block b = philox4x64({counter_, 0, stream_id_, 0}, key_);
    ++counter_;
    return b;
}

double Stream::uniform01() { return u64_to_unit(next_block().w[0]); }

std::uint64_t Stream::next_u64() { return next_block().w[0]; }

std::uint64_t Stream::uniform_below(std::uint64_t bound) {
    if (bound == 0) {
        throw ConfigError("uniform_below: bound must be positive");
    }
    // Unbiased rejection: discard draws from the incomplete top interval.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    for (;;) {
        const std::uint64_t w = next_u64();
        if (w < limit) {
            return w % bound;
        }
    }
}

std::pair<double, double> Stream::standard_normal_pair() {
    const Block b = next_block();
    const double u1 = u64_to_unit(b.w[0]);
    const double u2 = u64_to_unit(b.w[1]);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(theta), r * std::sin(theta)};
}

double Stream::standard_normal() { return standard_normal_pair().first; }

void Stream::fill_standard_normal(double* out, int n) {
    if (n < 0) {
        throw ConfigError("fill_standard_normal: negative count");
    }
    int i = 0;
    for (; i + 1 < n; i += 2) {
        const auto [z0, z1] = standard_normal_pair();
        out[i] = z0;
        out[i + 1] = z1;
    }
    if (i < n) {
        out[i] = standard_normal();
    }
}

Vec Stream::standard_normal_vector(int d) {
    if (d < 1 || d > kMaxDim) {
        throw ConfigError("standard_normal_vector: dimension must be in [1, " +
                          std::to_string(kMaxDim) + "]");
    }
    Vec v(d);
    fill_standard_normal(v.data(), d);
    return v;
}

} // namespace samplab::rng
