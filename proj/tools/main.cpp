#include "splatsim/cli.hpp"

int main(int argc, char** argv) {
    return splatsim::cli_main(argc, argv);
}
