#include "biofuse/cli.hpp"

int main(int argc, char** argv) {
    return biofuse::run_cli(argc, argv);
}
