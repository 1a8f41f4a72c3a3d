#include <iostream>

#include "regiontag/cli.hpp"

int main(int argc, char** argv) {
    return regiontag::run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
