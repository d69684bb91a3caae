#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>

namespace stsa {

// ChaCha20 keystream generator. The 64-bit seed fills the first eight key
// bytes (little-endian) and `stream` is the nonce, so (seed, stream) pairs
// give independent, platform-stable sequences. Variates are derived with
// explicit formulas instead of <random> distributions, whose outputs are
// implementation-defined.
class ChaChaRng {
 public:
  explicit ChaChaRng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64();

  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Uniform on (0, 1).
  double uniform_open();
  // Unbiased integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);
  // Standard normal (Box-Muller, both outputs used).
  double normal();
  // Gamma(shape, 1), Marsaglia-Tsang with the shape < 1 boost.
  double gamma(double shape);

 private:
  void refill();

  std::array<unsigned char, 32> key_{};
  std::array<unsigned char, 8> nonce_{};
  std::uint64_t block_ = 0;
  std::array<unsigned char, 512> buffer_{};
  std::size_t pos_ = 512;
  std::optional<double> spare_normal_;
};

// Child seed for a named sub-procedure, so partitioning, mapping, dummy
// splitting, noise and synthesis can be reproduced independently.
std::uint64_t derive_seed(std::uint64_t master, std::string_view label,
                          std::uint64_t index = 0);

}  // namespace stsa
