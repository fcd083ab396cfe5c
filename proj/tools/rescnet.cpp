#include <iostream>

#include "rescnet/cli.hpp"

int main(int argc, char** argv) { return rescnet::cli::run(argc, argv, std::cout, std::cerr); }
