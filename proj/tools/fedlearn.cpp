#include <string>
#include <vector>

#include "fedlearn/cli.hpp"

int main(int argc, char** argv) {
    return fedlearn::cli::main(std::vector<std::string>(argv, argv + argc));
}
