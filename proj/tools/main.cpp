#include <vector>

#include "matchsyn/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return matchsyn::cli::run(args);
}
