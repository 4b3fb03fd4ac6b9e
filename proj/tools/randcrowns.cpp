#include <iostream>

#include "randcrowns/cli.hpp"

int main(int argc, char** argv) { return randcrowns::cli::run(argc, argv, std::cout, std::cerr); }
