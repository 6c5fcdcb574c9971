#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace affine_cdo {

/// What a random stream is used for; part of the stream key so that factor noise, jump
/// clocks and jump sizes never share draws.
enum class StreamPurpose : std::uint32_t { factor = 1, clock = 2, jump_size = 3, panel_noise = 4, multistart = 5 };

/// Philox4x32-10 counter-based generator.
///
/// A stream is identified by (seed, scenario, purpose); the n-th block of output is a pure
/// function of that key and n, so draws are reproducible regardless of the order in which
/// scenarios are processed.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t scenario, StreamPurpose purpose)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        scenario_(scenario),
        purpose_(static_cast<std::uint32_t>(purpose)) {}

  /// Uniform on the open interval (0, 1) with 53 random bits.
  double uniform() {
    if (cursor_ == 4) refill();
    const std::uint64_t hi = block_[cursor_++];
    if (cursor_ == 4) refill();
    const std::uint64_t lo = block_[cursor_++];
    const std::uint64_t bits = ((hi << 32) | lo) >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  /// Exponential with unit rate.
  double exponential() { return -std::log(uniform()); }

 private:
  void refill() {
    std::array<std::uint32_t, 4> ctr{static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32),
                                     static_cast<std::uint32_t>(scenario_),
                                     static_cast<std::uint32_t>(scenario_ >> 32) ^ (purpose_ << 24)};
    std::array<std::uint32_t, 2> key = key_;
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = static_cast<std::uint64_t>(0xD2511F53u) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(0xCD9E8D57u) * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
      key[0] += 0x9E3779B9u;
      key[1] += 0xBB67AE85u;
    }
    block_ = ctr;
    cursor_ = 0;
    ++counter_;
  }

  std::array<std::uint32_t, 2> key_;
  std::uint64_t scenario_;
  std::uint32_t purpose_;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> block_{};
  int cursor_ = 4;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace affine_cdo
