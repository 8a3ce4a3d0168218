#include <iostream>

#include "sfm/cli.hpp"

int main(int argc, char** argv) { return sfm::cli::run(argc, argv, std::cout, std::cerr); }
