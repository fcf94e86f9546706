#include <iostream>

#include "synthvol/cli.hpp"

int main(int argc, char** argv) { return synthvol::cli::run(argc, argv, std::cout, std::cerr); }
