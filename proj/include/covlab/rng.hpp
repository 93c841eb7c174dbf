#pragma once

// Counter-based random streams.
//
// Every stochastic quantity in covlab is a pure function of
// (master seed, run index, substream index). The generator is Philox4x32-10;
// a stream is identified by a 64-bit key derived from (seed, run index) and a
// 64-bit substream id that occupies the upper half of the 128-bit counter.
// The lower half is the block counter. No state is shared between streams, so
// results do not depend on which thread executes a run or in what order.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace covlab {

namespace detail {

inline constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
inline constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
inline constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

constexpr void philox_round(std::array<std::uint32_t, 4>& c,
                            const std::array<std::uint32_t, 2>& k) {
  const std::uint64_t p0 = std::uint64_t{kPhiloxM0} * c[0];
  const std::uint64_t p1 = std::uint64_t{kPhiloxM1} * c[2];
  const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
  const auto lo0 = static_cast<std::uint32_t>(p0);
  const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
  const auto lo1 = static_cast<std::uint32_t>(p1);
  c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

}  // namespace detail

/// Philox4x32 with 10 rounds (Salmon et al., Random123).
constexpr std::array<std::uint32_t, 4> philox4x32_10(
    std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += detail::kPhiloxW0;
      key[1] += detail::kPhiloxW1;
    }
    detail::philox_round(counter, key);
  }
  return counter;
}

/// SplitMix64 finalizer; used only to derive stream keys.
constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Stream key for run `run_index` under `master_seed`:
/// key = splitmix64(master_seed ^ splitmix64(run_index)).
constexpr std::uint64_t stream_key(std::uint64_t master_seed,
                                   std::uint64_t run_index) {
  return splitmix64(master_seed ^ splitmix64(run_index));
}

/// A deterministic random stream. Cheap to construct; copyable (a copy replays
/// the same numbers).
class Stream {
 public:
  Stream() : Stream(0, 0) {}
  Stream(std::uint64_t key, std::uint64_t substream)
      : key_{static_cast<std::uint32_t>(key),
             static_cast<std::uint32_t>(key >> 32)},
        substream_(substream) {}

  /// The stream for (seed, run, substream).
  static Stream for_run(std::uint64_t seed, std::uint64_t run,
                        std::uint64_t substream = 0) {
    return Stream(stream_key(seed, run), substream);
  }

  /// A sibling stream sharing the key but with a different substream id.
  Stream substream(std::uint64_t id) const {
    Stream s;
    s.key_ = key_;
    s.substream_ = id;
    return s;
  }

  std::uint64_t next_u64() {
    if (buffered_ == 0) refill();
    --buffered_;
    return buffer_[buffered_];
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform on (0, 1).
  double uniform_open() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Bernoulli(p).
  bool bernoulli(double p) { return uniform() < p; }

  /// Uniform integer in [0, n), n > 0 (Lemire's method with rejection).
  std::uint64_t below(std::uint64_t n) {
    std::uint64_t x = next_u64();
    __uint128_t m = static_cast<__uint128_t>(x) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        x = next_u64();
        m = static_cast<__uint128_t>(x) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  /// Standard normal via Box-Muller; caches the second variate.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_open();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  std::uint64_t blocks_used() const { return block_; }

 private:
  void refill() {
    const std::array<std::uint32_t, 4> counter{
        static_cast<std::uint32_t>(block_),
        static_cast<std::uint32_t>(block_ >> 32),
        static_cast<std::uint32_t>(substream_),
        static_cast<std::uint32_t>(substream_ >> 32)};
    const auto out = philox4x32_10(counter, key_);
    ++block_;
    // Consumed from the back: buffer_[1] first.
    buffer_[0] = (std::uint64_t{out[3]} << 32) | out[2];
    buffer_[1] = (std::uint64_t{out[1]} << 32) | out[0];
    buffered_ = 2;
  }

  std::array<std::uint32_t, 2> key_;
  std::uint64_t substream_ = 0;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Two-bit direction source for the nearest-neighbour walk: one 64-bit draw
/// feeds 32 steps.
class DirectionBits {
 public:
  explicit DirectionBits(Stream& stream) : stream_(&stream) {}

  unsigned next() {
    if (remaining_ == 0) {
      bits_ = stream_->next_u64();
      remaining_ = 32;
    }
    const auto d = static_cast<unsigned>(bits_ & 3u);
    bits_ >>= 2;
    --remaining_;
    return d;
  }

 private:
  Stream* stream_;
  std::uint64_t bits_ = 0;
  int remaining_ = 0;
};

}  // namespace covlab
