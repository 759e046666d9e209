#include <iostream>

#include "aggbuf/cli/cli.hpp"

int main(int argc, char** argv) { return aggbuf::cli::run(argc, argv, std::cout, std::cerr); }
