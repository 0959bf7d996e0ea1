#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace dllm {

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

// 64-bit FNV-1a over raw bytes.
std::uint64_t fnv1a64(std::span<const unsigned char> bytes, std::uint64_t basis = kFnvOffset);
std::uint64_t fnv1a64(std::string_view text, std::uint64_t basis = kFnvOffset);

// FNV-style fold of one 64-bit word, byte by byte little-endian.
std::uint64_t fnv_fold(std::uint64_t h, std::uint64_t word);

// SplitMix64 finalizer; a bijective avalanche mix.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Lowercase, zero-padded, 16 hex digits.
std::string to_hex(std::uint64_t v);

}  // namespace dllm
