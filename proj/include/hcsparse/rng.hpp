#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace hcsparse {

/// SplitMix64 finalizer. Used only to derive seeds, never as the sampling engine.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Substream key derivation.
///
/// A substream is identified by the master seed and a path of counters
/// (purpose tag, cell index, replicate index, ...). The key is the left fold
///   k_0 = splitmix64(master),  k_{j+1} = splitmix64(k_j ^ splitmix64(c_j + j + 1))
/// so distinct paths give unrelated keys, and the key of a replicate does not
/// depend on which worker runs it or in what order.
constexpr std::uint64_t derive_key(std::uint64_t master,
                                   std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t key = splitmix64(master);
  std::uint64_t depth = 0;
  for (std::uint64_t c : path) {
    ++depth;
    key = splitmix64(key ^ splitmix64(c + depth));
  }
  return key;
}

/// Purpose tags for substream paths. Values are part of the reproducibility
/// contract; do not renumber.
enum class StreamTag : std::uint64_t {
  NullCalibration = 1,
  NullReplicate = 2,
  AltReplicate = 3,
  CoupledDraw = 4,
  Spacing = 5,
  SweepCell = 6,
  ChisqCalibration = 7,
  Sample = 8,
};

constexpr std::uint64_t tag(StreamTag t) noexcept { return static_cast<std::uint64_t>(t); }

/// A seeded random stream: Mersenne Twister engine plus the two variates the
/// library needs. Not thread-safe; give every worker its own stream.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t key) : key_(key) {
    std::seed_seq seq{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32),
                      static_cast<std::uint32_t>(splitmix64(key)),
                      static_cast<std::uint32_t>(splitmix64(key) >> 32)};
    engine_.seed(seq);
  }

  static RandomStream derive(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
    return RandomStream(derive_key(master, path));
  }

  std::uint64_t key() const noexcept { return key_; }

  /// Uniform on the open interval (0,1): (k + 1/2) 2^-53 for a 53-bit k.
  double uniform() noexcept {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() { return normal_(engine_); }

  bool bernoulli(double p) noexcept { return uniform() < p; }

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::uint64_t key_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace hcsparse
