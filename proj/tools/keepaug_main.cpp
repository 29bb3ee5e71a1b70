#include "keepaug/cli.hpp"

int main(int argc, char** argv) {
    return keepaug::run_cli(argc, argv);
}
