#include <iostream>

#include "cat/cli.hpp"

int main(int argc, char** argv) { return cat::cli::run(argc, argv, std::cin, std::cout, std::cerr); }
