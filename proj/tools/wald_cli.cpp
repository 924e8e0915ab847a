#include <vector>
#include <string>

#include "wald/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return wald::cli::run(args);
}
