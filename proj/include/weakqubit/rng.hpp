// Copyright 2026 The weakqubit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Random streams.
//
// Every stream is a std::mt19937_64 whose seed is derived from a top-level
// 64-bit seed and a path of stream indices by iterating the SplitMix64
// finalizer:
//
//   s_0 = seed,  s_{k+1} = splitmix64(s_k ^ splitmix64(index_k + 0x9E37...))
//
// Normal variates use the Box-Muller transform on 53-bit uniforms, so the
// sequences are identical across standard libraries (std::normal_distribution
// is implementation defined).

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>

namespace weakqubit {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seed of the substream reached from `seed` along `path`.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = splitmix64(seed);
    for (std::uint64_t index : path) s = splitmix64(s ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
    return s;
}

/// Well-known stream indices below a run seed.
namespace streams {
inline constexpr std::uint64_t kDetectorNoise = 0;
inline constexpr std::uint64_t kOracleProcess = 1;
inline constexpr std::uint64_t kOracleNoise = 2;
inline constexpr std::uint64_t kTauPairs = 3;
inline constexpr std::uint64_t kSweepRun = 4;
inline constexpr std::uint64_t kEnsembleMember = 5;
}  // namespace streams

class RandomStream {
   public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Standard normal variate.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        // 1 - u lies in (0, 1], so the log is finite.
        const double r = std::sqrt(-2.0 * std::log(1.0 - uniform()));
        const double phi = 2.0 * std::numbers::pi * uniform();
        spare_ = r * std::sin(phi);
        has_spare_ = true;
        return r * std::cos(phi);
    }

    /// Exponential variate with the given rate.
    double exponential(double rate) { return -std::log(1.0 - uniform()) / rate; }

    std::mt19937_64 &engine() { return engine_; }

   private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace weakqubit
