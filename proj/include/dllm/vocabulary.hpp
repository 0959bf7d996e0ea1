#pragma once

#include <cstdint>
#include <optional>

namespace dllm {

using TokenId = std::int32_t;

// Real tokens are ids [0, size). The mask id lies outside that range; an
// end-of-sequence id, when present, is one of the real tokens.
class Vocabulary {
 public:
  explicit Vocabulary(std::int32_t size, std::optional<TokenId> eos_id = std::nullopt);
  Vocabulary(std::int32_t size, TokenId mask_id, std::optional<TokenId> eos_id);

  std::int32_t size() const noexcept { return size_; }
  TokenId mask_id() const noexcept { return mask_id_; }
  std::optional<TokenId> eos_id() const noexcept { return eos_id_; }
  std::int32_t id_space() const noexcept { return mask_id_ + 1 > size_ ? mask_id_ + 1 : size_; }

  bool is_real(TokenId t) const noexcept { return t >= 0 && t < size_; }

  friend bool operator==(const Vocabulary&, const Vocabulary&) = default;

 private:
  std::int32_t size_;
  TokenId mask_id_;
  std::optional<TokenId> eos_id_;
};

}  // namespace dllm
