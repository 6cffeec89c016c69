#include <iostream>

#include "shardsim/commands.h"

int main(int argc, char **argv) {
    return shardsim::run_cli(argc, argv, std::cout, std::cerr);
}
