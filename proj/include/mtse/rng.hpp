#pragma once

#include <cstdint>
#include <limits>

namespace mtse {

/// Counter-based generator: the k-th output is a SplitMix64 finalizer applied
/// to key + k * golden. Streams derived from distinct (root, index...) keys are
/// independent of each other and of the order in which they are consumed.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  explicit RandomStream(std::uint64_t seed) : key_(mix(seed)) {}

  /// Stream for one replication (or one (point, replication) pair) of a study.
  static RandomStream derive(std::uint64_t root, std::uint64_t a, std::uint64_t b = 0) {
    return RandomStream(mix(mix(root ^ 0x6a09e667f3bcc908ULL) + a * kGolden + mix(b + 1)));
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix(key_ + (++counter_) * kGolden); }

  std::uint64_t counter() const { return counter_; }

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace mtse
