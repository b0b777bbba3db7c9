#include <iostream>

#include "smrm/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return smrm::run_cli(args, std::cout, std::cerr);
}
