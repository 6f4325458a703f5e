#include <string>
#include <vector>

#include <deepstdp/cli.hpp>

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return deepstdp::cli_main(args);
}
