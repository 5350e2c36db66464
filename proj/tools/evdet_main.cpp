#include <iostream>

#include "evdet/cli.hpp"

int main(int argc, char** argv) { return evdet::run_cli(argc, argv, std::cout, std::cerr); }
