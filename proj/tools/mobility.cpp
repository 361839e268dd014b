#include <iostream>

#include "mobility/cli.hpp"

int main(int argc, char** argv) { return mobility::run_cli(argc, argv, std::cout, std::cerr); }
