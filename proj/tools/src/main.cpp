#include <iostream>

#include "sirmarket/cli.hpp"

int main(int argc, char** argv) { return sirmarket::cli_main(argc, argv, std::cout, std::cerr); }
