#include <iostream>

#include "hybridsum/cli.hpp"

int main(int argc, char** argv) { return hybridsum::cli_dispatch(argc, argv, std::cout, std::cerr); }
