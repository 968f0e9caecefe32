#include <iostream>

#include "revlambda/cli.hpp"

int main(int argc, char** argv) { return revlambda::cli::main_entry(argc, argv, std::cout, std::cerr); }
