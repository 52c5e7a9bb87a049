#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) { return hilmeme::cli::run(argc, argv, std::cout, std::cerr); }
