#pragma once

#include <cstdint>
#include <string_view>

namespace dllm {

// Counter-based generator: every draw is a pure function of
// (seed, stream label, index, sub-counter). There is no hidden state, so the
// value for a position never depends on call order or batch composition.
class DeterministicRng {
 public:
  explicit DeterministicRng(std::uint64_t seed = 0) : seed_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t bits(std::string_view label, std::uint64_t index, std::uint64_t sub = 0) const;

  // Uniform double in [0, 1) with 53 bits of resolution.
  double uniform(std::string_view label, std::uint64_t index, std::uint64_t sub = 0) const;

  // Independent generator for a derived seed.
  DeterministicRng derive(std::uint64_t salt) const;

 private:
  std::uint64_t seed_;
};

}  // namespace dllm
