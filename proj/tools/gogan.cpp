#include <iostream>

#include "gogan/cli/commands.hpp"

int main(int argc, char** argv) { return gogan::cli::run_cli(argc, argv, std::cout, std::cerr); }
