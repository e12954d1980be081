#include <iostream>

#include "mimic/cli.hpp"

int main(int argc, char** argv) { return mimic::run_cli(argc, argv, std::cout, std::cerr); }
