#include <iostream>

#include "regulus/cli.hpp"

int main(int argc, char** argv) { return regulus::run_cli(argc, argv, std::cout, std::cerr); }
