#include <iostream>

#include "reposim/cli.hpp"

int main(int argc, char** argv) { return reposim::run_cli(argc, argv, std::cout, std::cerr); }
