#pragma once

#include <array>
#include <cstdint>

namespace cle_ekf::rng {

/// Random streams kept disjoint by the generator counter.
enum class Stream : std::uint32_t {
  process = 0,
  measurement = 1,
  sampling = 2,
};

/// Philox4x32-10 block cipher (Salmon et al., SC'11). Pure function of key and counter.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) noexcept;

/**
 * Counter-based standard-normal source.
 *
 * Draw `index` of step `step` in `stream` is a fixed function of
 * (seed, stream, step, index), so runs can be evaluated in any order or on
 * any thread and still reproduce bit-identical values.
 */
class NormalSource {
 public:
  NormalSource(std::uint64_t seed, Stream stream) noexcept : seed_(seed), stream_(stream) {}

  double normal(std::uint64_t step, std::uint32_t index) const noexcept;
  /// Uniform in (0, 1), 53-bit resolution.
  double uniform(std::uint64_t step, std::uint32_t index) const noexcept;

  std::uint64_t seed() const noexcept { return seed_; }

 private:
  std::array<std::uint32_t, 4> block(std::uint64_t step, std::uint32_t slot) const noexcept;

  std::uint64_t seed_;
  Stream stream_;
};

}  // namespace cle_ekf::rng
