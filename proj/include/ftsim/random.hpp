// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ftsim {

/// 64-bit finalizer from SplitMix64; bijective on uint64.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

/// FNV-1a over the label bytes.
constexpr std::uint64_t hash_label(std::string_view label) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Counter-based generator keyed by (global seed, stream label). Each draw
/// mixes the key with an incrementing counter, so streams never share state.
class RandomStream {
 public:
  RandomStream() = default;
  RandomStream(std::uint64_t seed, std::string_view stream_id);

  const std::string& id() const { return id_; }
  std::uint64_t draws() const { return counter_; }

  std::uint64_t uniform64();
  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01();
  /// Inter-arrival time in ticks for a Poisson process of `rate` events/tick.
  double exponential(double rate);
  /// Uniform integer in [lo, hi], inclusive, without modulo bias.
  std::uint64_t uniform_range(std::uint64_t lo, std::uint64_t hi);
  bool bernoulli(double p) { return uniform01() < p; }

 private:
  std::string id_;
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace ftsim
