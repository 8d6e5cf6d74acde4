#include "ctlayer/cli.hpp"

#include <string>
#include <vector>

int main(int argc, char** argv) {
    return ctlayer::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
