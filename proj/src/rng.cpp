#include "stsa/rng.hpp"

#include <sodium.h>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace stsa {
namespace {

void ensure_sodium() {
  static const int rc = sodium_init();
  if (rc < 0) throw std::runtime_error("libsodium initialisation failed");
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

ChaChaRng::ChaChaRng(std::uint64_t seed, std::uint64_t stream) {
  ensure_sodium();
  static_assert(crypto_stream_chacha20_KEYBYTES == 32);
  static_assert(crypto_stream_chacha20_NONCEBYTES == 8);
  for (int i = 0; i < 8; ++i) {
    key_[i] = static_cast<unsigned char>(seed >> (8 * i));
    nonce_[i] = static_cast<unsigned char>(stream >> (8 * i));
  }
}

void ChaChaRng::refill() {
  static const std::array<unsigned char, 512> zeros{};
  crypto_stream_chacha20_xor_ic(buffer_.data(), zeros.data(), buffer_.size(),
                                nonce_.data(), block_, key_.data());
  block_ += buffer_.size() / 64;
  pos_ = 0;
}

std::uint64_t ChaChaRng::next_u64() {
  if (pos_ + 8 > buffer_.size()) refill();
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t{buffer_[pos_ + i]} << (8 * i);
  pos_ += 8;
  return v;
}

double ChaChaRng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double ChaChaRng::uniform_open() {
  return (static_cast<double>(next_u64() >> 12) + 0.5) * 0x1.0p-52;
}

std::uint64_t ChaChaRng::below(std::uint64_t n) {
  // Rejection on the top of the range keeps the draw unbiased.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t v;
  do {
    v = next_u64();
  } while (v >= limit);
  return v % n;
}

double ChaChaRng::normal() {
  if (spare_normal_) {
    const double v = *spare_normal_;
    spare_normal_.reset();
    return v;
  }
  const double u1 = uniform_open();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_normal_ = r * std::sin(theta);
  return r * std::cos(theta);
}

double ChaChaRng::gamma(double shape) {
  if (!(shape > 0.0)) throw std::invalid_argument("gamma shape must be positive");
  if (shape < 1.0) {
    const double g = gamma(shape + 1.0);
    return g * std::pow(uniform_open(), 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform_open();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view label,
                          std::uint64_t index) {
  // FNV-1a over the label, then splitmix to decorrelate nearby inputs.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : label) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(splitmix64(master ^ h) + index);
}

}  // namespace stsa
