#include <iostream>

#include "lsa/cli/commands.hpp"

int main(int argc, char** argv) { return lsa::cli::main(argc, argv, std::cout, std::cerr); }
