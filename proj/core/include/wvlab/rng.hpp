#ifndef WVLAB_RNG_HPP
#define WVLAB_RNG_HPP

#include <cstdint>

namespace wvlab {

// SplitMix64 finalizer.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Counter-based generator keyed by (seed, stream).  Every shot of a Monte
// Carlo run gets its own stream, so batches drawn in parallel reproduce the
// serial sequence bit-exactly.
class CounterRng {
public:
  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_(mix64(seed ^ mix64(stream))), counter_(0) {}

  std::uint64_t next_u64() { return mix64(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

  // Uniform in [0, 1) with 53 bits of mantissa.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

private:
  std::uint64_t key_;
  std::uint64_t counter_;
};

} // namespace wvlab

#endif
