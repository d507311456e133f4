#include "nvrelax/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return nvrelax::run_cli(argc, argv, std::cout, std::cerr); }
