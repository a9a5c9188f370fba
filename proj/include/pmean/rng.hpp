// Copyright 2026 The pmean Authors.
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

#include <cmath>
#include <cstdint>
#include <random>

#include <boost/random/exponential_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

namespace pmean {

/// SplitMix64 finalizer, used to derive decorrelated seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of stream `stream` under `master`. Counter-based: stream i never
/// depends on how many draws other streams consumed.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept {
  return splitmix64(master ^ splitmix64(stream ^ 0x5851f42d4c957f2dULL));
}

/// Caller-owned random stream. Library functions never hold RNG state of
/// their own; everything random takes one of these by reference.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}
  RandomStream(std::uint64_t master, std::uint64_t stream) : engine_(derive_seed(master, stream)) {}

  /// Uniform on [0, 1).
  double uniform() { return unit_(engine_); }
  double gaussian() { return normal_(engine_); }
  /// Exp(1).
  double exponential() { return exponential_(engine_); }

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::mt19937_64 engine_;
  // Boost's ziggurat samplers; the libstdc++ ones are several times slower.
  boost::random::uniform_01<double> unit_;
  boost::random::normal_distribution<double> normal_{0.0, 1.0};
  boost::random::exponential_distribution<double> exponential_{1.0};
};

}  // namespace pmean
