#include <iostream>

#include "kfspec/cli/app.hpp"

int main(int argc, char** argv) { return kfspec::cli::run(argc, argv, std::cout, std::cerr); }
