#include <vector>
#include <string>

#include "stomech/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return stomech::run_cli(args);
}
