#include <iostream>
#include <string>
#include <vector>

#include "snlab/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return snlab::run_cli(args, std::cout, std::cerr);
}
