#include <iostream>

#include "mprk/cli.hpp"

int main(int argc, char* argv[]) { return mprk::cli::main(argc, argv, std::cout, std::cerr); }
