#include "dcemap/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return dcemap::cli_dispatch(argc, argv, std::cout, std::cerr); }
