#include <vector>

#include "microgrid/io.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return microgrid::run_cli(args);
}
