// SPDX-License-Identifier: Apache-2.0
#include "ftsim/random.hpp"

#include <cmath>
#include <limits>

namespace ftsim {

namespace {
constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
}

RandomStream::RandomStream(std::uint64_t seed, std::string_view stream_id)
    : id_(stream_id), key_(mix64(mix64(seed) ^ hash_label(stream_id))) {}

std::uint64_t RandomStream::uniform64() {
  ++counter_;
  return mix64(key_ + counter_ * kGolden);
}

double RandomStream::uniform01() {
  return static_cast<double>(uniform64() >> 11) * 0x1.0p-53;
}

double RandomStream::exponential(double rate) {
  if (!(rate > 0.0) || !std::isfinite(rate)) {
    throw ParameterError("exponential rate must be positive, got " + std::to_string(rate));
  }
  return -std::log1p(-uniform01()) / rate;
}

std::uint64_t RandomStream::uniform_range(std::uint64_t lo, std::uint64_t hi) {
  if (hi < lo) throw ParameterError("uniform_range: hi < lo");
  const std::uint64_t span = hi - lo;
  if (span == std::numeric_limits<std::uint64_t>::max()) return uniform64();
  const std::uint64_t n = span + 1;
  // rejection threshold: largest multiple of n representable
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x = 0;
  do {
    x = uniform64();
  } while (x >= limit);
  return lo + x % n;
}

}  // namespace ftsim
