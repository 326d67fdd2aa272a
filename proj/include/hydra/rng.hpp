#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace hydra {

// Seeded generator with portable derived draws. The standard distributions are
// implementation-defined, so anything that must reproduce bit-for-bit goes
// through here instead.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform on [0, 1) with 53 bits of resolution.
  double uniform01() { return double(next() >> 11) * 0x1.0p-53; }

  // Uniform integer on [0, n), n > 0. Rejection sampling keeps it unbiased.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
      x = next();
    } while (x >= limit);
    return x % n;
  }

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[below(i)]);
    }
  }

  // Knuth's multiplication method; adequate for the small rates used here.
  std::uint32_t poisson(double lambda);

 private:
  std::mt19937_64 engine_;
};

// Stateless mixer (splitmix64 finalizer); maps a key to a well-spread word.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace hydra
