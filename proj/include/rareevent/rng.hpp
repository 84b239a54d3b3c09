#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace rareevent {

/// A seeded random stream. Substreams are derived from the seed alone, never from
/// the consumed state, so one consumer drawing more numbers cannot shift another.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }

  RngStream substream(std::string_view name) const;
  RngStream substream(std::uint64_t index) const;

  double uniform();  ///< in [0, 1)
  double normal();
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t hash_name(std::string_view name);

}  // namespace rareevent
