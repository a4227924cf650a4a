#include <iostream>

#include "nez/cli.hpp"

int main(int argc, char** argv)
{
    std::ios::sync_with_stdio(false);
    return nez::cli::run(argc, argv, std::cin, std::cout, std::cerr);
}
