#include "cli.h"

#include <iostream>

int main(int argc, char** argv) { return dpacct::cli::run(argc, argv, std::cout, std::cerr); }
