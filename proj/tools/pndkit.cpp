#include <iostream>

#include "pndkit/cli.hpp"

int main(int argc, char** argv) { return pndkit::cli::run(argc, argv, std::cout, std::cerr); }
