#include "chestnet/cli.hpp"

int main(int argc, char** argv) { return chestnet::cli::run(argc, argv); }
