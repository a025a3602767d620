#include <iostream>

#include "hdiv/cli.hpp"

int main(int argc, char** argv) { return hdiv::cli::run(argc, argv, std::cout, std::cerr); }
