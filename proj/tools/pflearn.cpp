#include <iostream>

#include "pfl/cli.hpp"

int main(int argc, char** argv) { return pfl::run_cli(argc, argv, std::cout, std::cerr); }
