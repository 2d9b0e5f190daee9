#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace imbens {

/// Master seed for any stochastic operation.
struct Seed {
  std::uint64_t value = 0;

  constexpr Seed() = default;
  constexpr explicit Seed(std::uint64_t v) : value(v) {}

  friend constexpr bool operator==(Seed, Seed) = default;
};

/// Sub-seed for (purpose, index). Pure function of its arguments, so any
/// component can be re-derived independently (e.g. per-member seeds in
/// parallel ensembles).
Seed derive_seed(Seed master, std::string_view purpose, std::uint64_t index = 0);

// Thin wrapper over mt19937_64. The distributions are implemented here rather
// than taken from <random> because the standard leaves their algorithms
// unspecified, and model files must be reproducible across toolchains.
class Rng {
 public:
  explicit Rng(Seed seed) : engine_(seed.value) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform();

  /// Uniform on [0, 1].
  double uniform_closed();

  /// Uniform integer in [0, n). n must be > 0.
  std::size_t index(std::size_t n);

  double normal();

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[index(i)]);
    }
  }

  /// `count` distinct positions drawn from [0, n), in draw order.
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t count);

 private:
  std::mt19937_64 engine_;
};

}  // namespace imbens
