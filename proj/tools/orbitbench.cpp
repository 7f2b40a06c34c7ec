#include "orbitbench/cli.hpp"

int main(int argc, char** argv) { return orbitbench::cli::run(argc, argv); }
