#pragma once

#include <cstdint>

namespace biasforge {

// Stream purposes. Each (seed, applicant, application, purpose) tuple names an
// independent stream, so results never depend on generation order.
enum class StreamTag : std::uint64_t {
  Population = 1,
  Terms = 2,
  Signals = 3,
  Outcome = 4,
  Reapply = 5,
  Decision = 6,
  Multistart = 7,
  Bootstrap = 8,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Counter-based stream: the state is a hash of the stream key and every draw
// advances a counter. Satisfies UniformRandomBitGenerator.
class StreamRng {
 public:
  using result_type = std::uint64_t;

  StreamRng(std::uint64_t seed, std::uint64_t applicant, std::uint64_t application,
            StreamTag tag) noexcept
      : state_(splitmix64(splitmix64(splitmix64(seed) ^ applicant) ^
                          (application * 0x632be59bd9b4e019ULL)) ^
               static_cast<std::uint64_t>(tag)) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }

  result_type operator()() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform on [0, 1) with 53 bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1).
  double uniform_open() noexcept {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  bool bernoulli(double p) noexcept { return uniform() < p; }

  // Standard normal by Box-Muller; no cached second variate so every call
  // consumes exactly two words.
  double normal() noexcept;

 private:
  std::uint64_t state_;
};

}  // namespace biasforge
