#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace epflow::rng {

/// Philox4x64-10 counter-based generator. Each (seed, stream) pair yields an
/// independent substream; the keystream matches numpy.random.Philox with
/// key = [seed, stream] word for word.
class Philox {
 public:
  using result_type = std::uint64_t;

  Philox(std::uint64_t seed, std::uint64_t stream) : key_{seed, stream} {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (index_ == 4) {
      increment();  // numpy advances the counter before each block
      block_ = generate(counter_, key_);
      index_ = 0;
    }
    return block_[index_++];
  }

  /// Uniform double in (0, 1), never exactly 0.
  double uniform() {
    return (static_cast<double>(operator()() >> 11) + 0.5) * 0x1.0p-53;
  }

 private:
  static std::array<std::uint64_t, 4> generate(std::array<std::uint64_t, 4> ctr,
                                               std::array<std::uint64_t, 2> key);
  void increment() {
    for (int i = 0; i < 4; ++i) {
      if (++counter_[i] != 0) break;
    }
  }

  std::array<std::uint64_t, 2> key_;
  std::array<std::uint64_t, 4> counter_{0, 0, 0, 0};
  std::array<std::uint64_t, 4> block_{};
  int index_ = 4;
};

}  // namespace epflow::rng
