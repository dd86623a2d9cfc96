#include "rfrac/cli.hpp"

int main(int argc, char** argv) { return rfrac::cli_main(argc, argv); }
