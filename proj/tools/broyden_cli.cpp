#include <iostream>

#include "broyden/cli.hpp"

int main(int argc, char** argv) { return broyden::run_cli(argc, argv, std::cout, std::cerr); }
