#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <utility>

namespace eegf0 {

/// SplitMix64 (Steele, Lea, Flood 2014). Every random decision in the
/// library goes through this generator so results are reproducible across
/// platforms and standard libraries. The derived draws below are part of
/// the reproducibility contract:
///
///   uniform01()      = ((next() >> 11) + 1) * 2^-53, in (0, 1]
///   below(n)         = high 64 bits of next() * n   (Lemire multiply-shift)
///   gaussian()       = Box-Muller cosine branch, two uniforms per draw
class SplitMix64 {
 public:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t next() noexcept {
    state_ += kGolden;
    return mix(state_);
  }

  double uniform01() noexcept {
    return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
  }

  std::uint64_t below(std::uint64_t n) noexcept {
    const unsigned __int128 wide =
        static_cast<unsigned __int128>(next()) * static_cast<unsigned __int128>(n);
    return static_cast<std::uint64_t>(wide >> 64);
  }

  double gaussian() noexcept {
    const double u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Fisher-Yates, walking from the back.
  template <typename T>
  void shuffle(std::span<T> items) noexcept {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t state_;
};

/// Independent stream `index` derived from a base seed; adding streams never
/// perturbs earlier ones.
inline constexpr std::uint64_t derive_stream_seed(std::uint64_t base,
                                                  std::uint64_t index) noexcept {
  return SplitMix64::mix(base ^ SplitMix64::mix((index + 1) * SplitMix64::kGolden));
}

}  // namespace eegf0
