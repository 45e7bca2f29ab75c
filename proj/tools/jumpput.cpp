#include <iostream>

#include "jumpput/cli.hpp"

int main(int argc, char** argv) { return jumpput::run_cli(argc, argv, std::cout, std::cerr); }
