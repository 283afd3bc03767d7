#include <iostream>

#include "deepscan/cli.hpp"

int main(int argc, char** argv) { return deepscan::cli::run(argc, argv, std::cout, std::cerr); }
