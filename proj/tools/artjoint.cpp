#include <iostream>

#include "artjoint/cli.hpp"

int main(int argc, char** argv) { return artjoint::run_cli(argc, argv, std::cout, std::cerr); }
