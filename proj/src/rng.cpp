#include "dllm/rng.hpp"

#include "dllm/hash.hpp"

namespace dllm {

std::uint64_t DeterministicRng::bits(std::string_view label, std::uint64_t index, std::uint64_t sub) const {
  std::uint64_t h = mix64(seed_ ^ fnv1a64(label));
  h = mix64(h ^ mix64(index + 0x632be59bd9b4e019ULL));
  return mix64(h ^ mix64(sub + 0x8cb92ba72f3d8dd7ULL));
}

double DeterministicRng::uniform(std::string_view label, std::uint64_t index, std::uint64_t sub) const {
  return static_cast<double>(bits(label, index, sub) >> 11) * 0x1.0p-53;
}

DeterministicRng DeterministicRng::derive(std::uint64_t salt) const { return DeterministicRng(mix64(seed_ ^ mix64(salt))); }

}  // namespace dllm
