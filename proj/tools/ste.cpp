#include <string>
#include <vector>

#include "ste/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return ste::cli::dispatch(args);
}
