#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace efm {

/// Philox-4x32-10 counter-based generator. A draw is a pure function of
/// (seed, stream_id, counter), so Monte Carlo batches are reproducible
/// independent of scheduling and sub-windows can be replayed by offsetting
/// counters.
class Philox {
 public:
  static std::array<std::uint32_t, 4> block(std::uint64_t seed, std::uint64_t stream,
                                            std::uint64_t counter) {
    std::uint32_t k0 = static_cast<std::uint32_t>(seed);
    std::uint32_t k1 = static_cast<std::uint32_t>(seed >> 32);
    std::array<std::uint32_t, 4> x = {
        static_cast<std::uint32_t>(counter), static_cast<std::uint32_t>(counter >> 32),
        static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = static_cast<std::uint64_t>(0xD2511F53u) * x[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(0xCD9E8D57u) * x[2];
      x = {static_cast<std::uint32_t>(p1 >> 32) ^ x[1] ^ k0, static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ x[3] ^ k1, static_cast<std::uint32_t>(p0)};
      k0 += 0x9E3779B9u;
      k1 += 0xBB67AE85u;
    }
    return x;
  }
};

/// Stateless Gaussian stream: normal(counter) never depends on call order.
class GaussianStream {
 public:
  GaussianStream(std::uint64_t seed, std::uint64_t stream_id)
      : seed_(seed), stream_(stream_id) {}

  double uniform(std::uint64_t counter) const {
    const auto x = Philox::block(seed_, stream_, counter);
    const std::uint64_t v = (static_cast<std::uint64_t>(x[0]) << 32) | x[1];
    return (static_cast<double>(v >> 11) + 0.5) * 0x1.0p-53;  // (0, 1)
  }

  double normal(std::uint64_t counter) const {
    const auto x = Philox::block(seed_, stream_, counter);
    const std::uint64_t v0 = (static_cast<std::uint64_t>(x[0]) << 32) | x[1];
    const std::uint64_t v1 = (static_cast<std::uint64_t>(x[2]) << 32) | x[3];
    const double u1 = (static_cast<double>(v0 >> 11) + 0.5) * 0x1.0p-53;
    const double u2 = (static_cast<double>(v1 >> 11) + 0.5) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  /// Both Box-Muller values of one block; bulk consumers draw
  /// normal_pair(c >> 1)[c & 1] to halve the generator cost while staying a
  /// pure function of the counter.
  std::array<double, 2> normal_pair(std::uint64_t counter) const {
    const auto x = Philox::block(seed_, stream_, counter);
    const std::uint64_t v0 = (static_cast<std::uint64_t>(x[0]) << 32) | x[1];
    const std::uint64_t v1 = (static_cast<std::uint64_t>(x[2]) << 32) | x[3];
    const double u1 = (static_cast<double>(v0 >> 11) + 0.5) * 0x1.0p-53;
    const double u2 = (static_cast<double>(v1 >> 11) + 0.5) * 0x1.0p-53;
    const double rho = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    return {rho * std::cos(theta), rho * std::sin(theta)};
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
};

}  // namespace efm
