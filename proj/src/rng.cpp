#include "nlar/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace nlar {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

double to_unit(std::uint64_t bits) {
  // top 53 bits -> [0, 1)
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}
}  // namespace

std::uint64_t mix64(std::uint64_t x) {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t hash_name(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::uint64_t derive_stream(std::uint64_t seed, std::string_view tag) {
  return mix64(mix64(seed) ^ hash_name(tag));
}

std::uint64_t derive_stream(std::uint64_t seed, std::string_view tag, std::uint64_t extra) {
  return mix64(derive_stream(seed, tag) ^ mix64(extra));
}

double NoiseStream::sample(std::uint64_t step, std::uint64_t dim) const {
  if (kind_ == NoiseKind::None) return 0.0;
  const std::uint64_t bits = mix64(mix64(mix64(seed_) ^ step) ^ dim);
  return (2.0 * to_unit(bits) - 1.0) * NoiseSpec::kSupportBound;
}

void NoiseStream::fill(std::uint64_t step, std::span<double> out) const {
  for (std::size_t d = 0; d < out.size(); ++d) out[d] = sample(step, d);
}

std::vector<double> sample_noise(const NoiseStream& stream, std::size_t n) {
  std::vector<double> out(n);
  stream.fill(0, out);
  return out;
}

std::uint64_t SeqRng::next_u64() {
  state_ += kGolden;
  std::uint64_t x = state_;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t SeqRng::next_below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("next_below: n must be >= 1");
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x = next_u64();
  while (x >= limit) x = next_u64();
  return x % n;
}

double SeqRng::next_unit() { return to_unit(next_u64()); }

double SeqRng::next_gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = next_unit();
  while (u1 <= 0.0) u1 = next_unit();
  const double u2 = next_unit();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * M_PI * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

}  // namespace nlar
