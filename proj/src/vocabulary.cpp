#include "dllm/vocabulary.hpp"

#include <string>

#include "dllm/error.hpp"

namespace dllm {

Vocabulary::Vocabulary(std::int32_t size, std::optional<TokenId> eos_id) : Vocabulary(size, size, eos_id) {}

Vocabulary::Vocabulary(std::int32_t size, TokenId mask_id, std::optional<TokenId> eos_id)
    : size_(size), mask_id_(mask_id), eos_id_(eos_id) {
  require(size >= 1, "vocabulary size must be positive");
  require(mask_id >= size, "mask id " + std::to_string(mask_id) + " collides with a real token");
  if (eos_id) {
    require(*eos_id >= 0 && *eos_id < size, "eos id must be a real token");
    require(*eos_id != mask_id, "eos id and mask id must differ");
  }
}

}  // namespace dllm
