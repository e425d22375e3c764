#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace nlar {

// SplitMix64 finalizer. Used as the mixing primitive for every seeded
// stream in the library so results are identical across platforms.
std::uint64_t mix64(std::uint64_t x);

// FNV-1a over bytes; stable key for string-identified streams.
std::uint64_t hash_name(std::string_view s);

// Derive an independent stream key from a base seed, a purpose tag and an
// optional extra index (epoch, optimizer id, ...). Distinct tags give
// decorrelated streams of the same base seed.
std::uint64_t derive_stream(std::uint64_t seed, std::string_view tag);
std::uint64_t derive_stream(std::uint64_t seed, std::string_view tag, std::uint64_t extra);

enum class NoiseKind { UniformUnitVar, None };

// Injected-noise distribution: Uniform[-sqrt(3), sqrt(3)] has mean 0 and
// variance exactly 1.
struct NoiseSpec {
  NoiseKind distribution = NoiseKind::UniformUnitVar;
  static constexpr double kSupportBound = 1.7320508075688772935;  // sqrt(3)
};

// Counter-based noise stream: sample(step, dim) is a pure function of
// (seed, step, dim), so per-dimension streams are independent and adding
// dimensions never perturbs existing ones.
class NoiseStream {
 public:
  NoiseStream() = default;
  explicit NoiseStream(std::uint64_t seed, NoiseKind kind = NoiseKind::UniformUnitVar)
      : seed_(seed), kind_(kind) {}

  double sample(std::uint64_t step, std::uint64_t dim) const;
  void fill(std::uint64_t step, std::span<double> out) const;

  std::uint64_t seed() const { return seed_; }
  NoiseKind kind() const { return kind_; }

 private:
  std::uint64_t seed_ = 0;
  NoiseKind kind_ = NoiseKind::UniformUnitVar;
};

// n draws at indices 0..n-1 (step counter 0): deterministic given seed and
// draw index.
std::vector<double> sample_noise(const NoiseStream& stream, std::size_t n);

// Sequential generator for shuffles, parameter init and synthetic data.
// SplitMix64 underneath; bounded draws use rejection sampling so the
// sequence is identical on every platform.
class SeqRng {
 public:
  explicit SeqRng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();
  std::uint64_t next_below(std::uint64_t n);  // uniform in [0, n), n >= 1
  double next_unit();                         // [0, 1)
  double next_gaussian();                     // standard normal

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace nlar
