#include <iostream>

#include "dasent/pipeline.hpp"

int main(int argc, char** argv) { return dasent::run_command(argc, argv, std::cout, std::cerr); }
