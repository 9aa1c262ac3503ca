#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) { return trirast::runCli(argc, argv, std::cout, std::cerr); }
