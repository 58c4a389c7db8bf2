#include <iostream>

#include "hapforge/cli.hpp"

int main(int argc, char** argv) { return hapforge::cli::run(argc, argv, std::cout, std::cerr); }
