#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>

namespace shiftconf {

namespace detail {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += kGolden;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t master, std::uint64_t stream) {
  return splitmix64(splitmix64(master) ^ splitmix64(stream + kGolden));
}

}  // namespace detail

/// Deterministic random stream addressed by (master_seed, stream_id).
/// Equal addresses replay the identical sequence on every platform and
/// thread schedule. Derived streams never share state with their parent,
/// so work can be partitioned across threads without losing replay.
class RngStream {
 public:
  explicit RngStream(std::uint64_t master_seed, std::uint64_t stream_id = 0)
      : master_seed_(master_seed),
        stream_id_(stream_id),
        engine_(detail::mix_seed(master_seed, stream_id)) {}

  RngStream derived(std::uint64_t salt) const {
    return RngStream(master_seed_, detail::splitmix64(stream_id_ ^ detail::splitmix64(salt)));
  }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53-bit resolution.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform on {0, ..., n-1} by rejection (no modulo bias).
  std::size_t uniform_index(std::size_t n) {
    if (n == 0) throw std::invalid_argument("uniform_index: n must be positive");
    const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t limit = max - max % static_cast<std::uint64_t>(n);
    std::uint64_t r = engine_();
    while (r >= limit) r = engine_();
    return static_cast<std::size_t>(r % static_cast<std::uint64_t>(n));
  }

  std::uint64_t master_seed() const noexcept { return master_seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  /// Seed value that reproduces this stream's engine, for run records.
  std::uint64_t engine_seed() const noexcept { return detail::mix_seed(master_seed_, stream_id_); }

 private:
  std::uint64_t master_seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
};

}  // namespace shiftconf
