#pragma once

#include <iosfwd>

namespace dllm {

// Exit statuses: 0 success, 1 usage/config, 2 decode/contract violation,
// 3 trace error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dllm
