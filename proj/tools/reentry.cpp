#include <reentry/cli/cli.hpp>

#include <iostream>

int main(int argc, char **argv)
{
    return reentry::cli::run(argc, argv, std::cout, std::cerr);
}
