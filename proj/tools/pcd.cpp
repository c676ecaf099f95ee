#include <iostream>

#include "pcd/cli.hpp"

int main(int argc, char** argv) { return pcd::run_cli(argc, argv, std::cout, std::cerr); }
