#include <iostream>

#include "wavesmooth/cli.hpp"

int main(int argc, char** argv) { return wavesmooth::run_cli(argc, argv, std::cout, std::cerr); }
