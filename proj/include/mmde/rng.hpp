#ifndef MMDE_RNG_HPP
#define MMDE_RNG_HPP

#include <bit>
#include <cmath>
#include <cstdint>

namespace mmde {

// SplitMix64. Used everywhere randomness is needed so that results do not
// depend on the standard library's distribution implementations: identical
// seeds give identical streams on any build.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1)
  double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // uniform in (0, 1]
  double next_double_open() {
    return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
  }

  // unbiased uniform integer in [0, n)
  std::uint64_t next_below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t mask = ~0ull >> std::countl_zero(n - 1);
    for (;;) {
      const std::uint64_t v = next() & mask;
      if (v < n) return v;
    }
  }

  // standard normal via Box-Muller (one value per call, second discarded)
  double next_normal() {
    const double u1 = next_double_open();
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(6.283185307179586 * u2);
  }

 private:
  std::uint64_t state_;
};

// Stream purposes; combined with a user seed and up to two indices they name
// independent substreams so parallel work never shares generator state.
enum class Stream : std::uint64_t {
  stats_pairs = 1,
  toy_model,
  toy_pair,
  scalar_pair,
  train_init,
  train_shuffle,
  train_negatives,
  bound_model,
  bound_context,
  generic,
};

namespace detail {
inline std::uint64_t mix_key(std::uint64_t h, std::uint64_t k) {
  // murmur3 finalizer over the running hash xor key
  std::uint64_t x = h ^ (k + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2));
  x ^= x >> 33;
  x *= 0xFF51AFD7ED558CCDull;
  x ^= x >> 33;
  x *= 0xC4CEB9FE1A85EC53ull;
  x ^= x >> 33;
  return x;
}
}  // namespace detail

inline SplitMix64 substream(std::uint64_t seed, Stream purpose,
                            std::uint64_t a = 0, std::uint64_t b = 0) {
  std::uint64_t h = detail::mix_key(0x243F6A8885A308D3ull, seed);
  h = detail::mix_key(h, static_cast<std::uint64_t>(purpose));
  h = detail::mix_key(h, a);
  h = detail::mix_key(h, b);
  return SplitMix64(h);
}

}  // namespace mmde

#endif  // MMDE_RNG_HPP
