#include <string>
#include <vector>

#include "sclr/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return sclr::cli::run_command(args);
}
