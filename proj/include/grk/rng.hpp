#pragma once

#include <cstdint>

namespace grk {

namespace detail {

// SplitMix64 finalizer: a full-period 64-bit bijection with strong avalanche.
inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t GOLDEN = 0x9E3779B97F4A7C15ull;

}  // namespace detail

// Counter-based splittable random stream. The triple (seed, stream, counter)
// fully determines every output, so copies replay identically and replicates
// parallelize by handing out distinct stream ids, never by sharing state.
class RngStream {
 public:
  RngStream() : RngStream(0, 0) {}

  RngStream(std::uint64_t seed, std::uint64_t stream)
      : seed_(seed),
        stream_(stream),
        key_(derive(detail::mix64(seed + detail::GOLDEN), stream)),
        counter_(0) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  // Next 64 uniform bits; advances the counter.
  std::uint64_t next_u64() {
    return detail::mix64(key_ + (++counter_) * detail::GOLDEN);
  }

  // Uniform double in the open interval (0,1): 53 random bits placed at the
  // midpoint of their cell, so 0.0 and 1.0 are unreachable by construction.
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53 + 0x1.0p-54;
  }

  // Independent child stream; derived from the key alone, so the parent's
  // counter position does not affect the child and vice versa.
  RngStream substream(std::uint64_t id) const {
    RngStream child;
    child.seed_ = seed_;
    child.stream_ = stream_;
    child.key_ = derive(key_, id);
    child.counter_ = 0;
    return child;
  }

 private:
  static constexpr std::uint64_t derive(std::uint64_t key, std::uint64_t id) {
    return detail::mix64(key ^ detail::mix64(id + 0xD1B54A32D192ED03ull));
  }

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t key_;
  std::uint64_t counter_;
};

}  // namespace grk
