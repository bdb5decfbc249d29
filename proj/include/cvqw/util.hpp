// Copyright 2026 The cvqw Authors.
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

#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace cvqw {

/// Raised when a caller violates an operation's preconditions.
class UsageError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a configuration file or CLI flag combination is invalid.
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Raised when dataset generation cannot satisfy its target (e.g. a family
/// keeps failing entanglement verification).
class GenerationExhaustedError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Raised when optimization produces a non-finite loss.
class TrainingFailureError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Raised when a fully leaked (all-zero) distribution cannot be sampled.
class DegenerateStateError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Raised when a metric is undefined for the given predictions (e.g. AUC
/// with a single class present).
class UndefinedMetricError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// splitmix64 finalizer; the workhorse behind all derived RNG streams.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derives an independent RNG stream seed from a base seed plus up to three
/// stream coordinates (sample index, epoch, setting id, ...). Every module
/// that needs per-item randomness goes through this so that streams are
/// stable under reordering and parallel scheduling.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t h = splitmix64(seed ^ 0x6a09e667f3bcc909ULL);
    h = splitmix64(h ^ a);
    h = splitmix64(h ^ b);
    h = splitmix64(h ^ c);
    return h;
}

/// Hashes a short label into a stream coordinate (e.g. "shuffle").
constexpr std::uint64_t stream_tag(std::string_view name) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char ch : name) {
        h ^= static_cast<unsigned char>(ch);
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t a,
                                std::uint64_t b = 0, std::uint64_t c = 0) {
    return std::mt19937_64(mix_seed(seed, a, b, c));
}

/// In-place Fisher-Yates shuffle driven by our own RNG so that orderings are
/// identical across standard-library implementations.
template <typename Vec>
void seeded_shuffle(Vec& v, std::mt19937_64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::uniform_int_distribution<std::size_t> dist(0, i - 1);
        std::swap(v[i - 1], v[dist(rng)]);
    }
}

/// Runs fn(i) for i in [0, n). With threads > 1 the index range is split in
/// contiguous chunks; results must be written to per-index slots so the
/// outcome is identical to the serial order.
void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t)>& fn);

} // namespace cvqw
