#include "pqm/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return pqm::cli::run(argc, argv, std::cout, std::cerr); }
