#include <iostream>

#include "dllm/cli.hpp"

int main(int argc, char** argv) { return dllm::run_cli(argc, argv, std::cout, std::cerr); }
