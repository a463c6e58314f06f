#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace snitchdt {

// splitmix64 finalizer; pure 64-bit integer arithmetic, identical on every platform.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

// Stream seed derived from (master_seed, purpose, node, tag). Distinct purposes
// yield statistically independent streams, so e.g. reseeding the attack-variation
// stream never perturbs the measurement-noise stream.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view purpose,
                                 std::string_view node = {}, std::string_view tag = {}) {
  std::uint64_t h = mix64(master);
  h = mix64(h ^ fnv1a64(purpose));
  h = mix64(h ^ fnv1a64(node));
  h = mix64(h ^ fnv1a64(tag));
  return h;
}

// Deterministic random source. mt19937_64 is fully specified by the standard;
// the explicit Box-Muller below avoids std::normal_distribution, whose algorithm
// is implementation-defined, so streams are bit-identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // [0, 1)
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // inclusive bounds
  int uniform_int(int lo, int hi) {
    const int span = hi - lo + 1;
    int v = lo + static_cast<int>(uniform() * span);
    return v > hi ? hi : v;
  }

  // standard normal
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    // u1 in (0, 1] keeps the log finite
    const double u1 = static_cast<double>((gen_() >> 11) + 1) * 0x1.0p-53;
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.141592653589793238462643383279502884 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace snitchdt
