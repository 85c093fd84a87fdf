#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace levylse {

/// Counter-based random stream (Philox4x32-10).
///
/// A stream is identified by a (seed, stream_id) pair; the 128-bit counter is
/// split into a 64-bit block index and the 64-bit stream id, so every
/// (seed, stream_id) pair addresses an independent sequence. Replications and
/// limit-law draws each take their own stream, which makes results
/// independent of scheduling order.
///
/// Satisfies UniformRandomBitGenerator, so standard distributions accept it.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  RandomStream(std::uint64_t seed, std::uint64_t stream_id);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on the open interval (0, 1).
  double uniform_open();
  /// Uniform on (lo, hi).
  double uniform(double lo, double hi);
  double normal();
  double exponential();
  std::uint64_t poisson(double mean);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int buffered_ = 0;  // remaining 64-bit words in buffer_
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

namespace detail {
/// One Philox4x32 block with 10 rounds.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                           std::array<std::uint32_t, 2> key);
}  // namespace detail

/// SplitMix64 finalizer; used to derive child seeds from (seed, index).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace levylse
