#include <iostream>

#include "degrade/cli.hpp"

int main(int argc, char** argv) { return degrade::run_cli(argc, argv, std::cout, std::cerr); }
