#include <iostream>

#include "clg/cli.hpp"

int main(int argc, char** argv) { return clg::cli::run(argc, argv, std::cout, std::cerr); }
