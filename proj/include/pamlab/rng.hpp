#pragma once

#include <array>
#include <cstdint>

namespace pamlab {

/// Philox4x32-10 block function (Salmon et al., SC'11). Stateless: the output
/// is a pure function of (counter, key).
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter ctr, Key key) noexcept;
};

/// Substream purposes. Distinct domains never share counters under one seed.
enum class StreamDomain : std::uint32_t {
  noise = 1,
  walk = 2,
  walk_interaction = 3,
  sample = 4,
};

/// Identifies a substream: the (trial, step) pair plus a purpose tag.
struct StreamId {
  StreamDomain domain = StreamDomain::sample;
  std::uint32_t trial = 0;
  std::uint32_t step = 0;
};

/// Counter-based generator over one substream. Two generators built from the
/// same (seed, stream) produce identical sequences regardless of construction
/// order or thread.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, StreamId stream) noexcept;

  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform() noexcept;
  double normal() noexcept;
  /// Exp(1) variate.
  double exponential() noexcept;

 private:
  void refill() noexcept;

  Philox4x32::Key key_;
  Philox4x32::Counter ctr_;
  Philox4x32::Counter buf_{};
  int buf_pos_ = 4;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace pamlab
