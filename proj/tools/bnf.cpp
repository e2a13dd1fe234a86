#include <iostream>

#include "bnf/cli.hpp"

int main(int argc, char** argv) { return bnf::run_cli(argc, argv, std::cout, std::cerr); }
