#include <iostream>

#include "jncf/cli/commands.hpp"

int main(int argc, char** argv) { return jncf::run_cli(argc, argv, std::cout, std::cerr); }
