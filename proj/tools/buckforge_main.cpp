#include <iostream>

#include "buckforge/cli.hpp"

int main(int argc, char** argv) {
    return buckforge::cli::run(argc, argv, std::cout, std::cerr);
}
