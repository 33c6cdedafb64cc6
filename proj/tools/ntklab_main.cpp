#include <iostream>

#include "ntk/cli.hpp"

int main(int argc, char** argv) {
    return ntk::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
