#include <string>
#include <vector>

#include "p2ps/cli/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return p2ps::cli::run_cli(args);
}
