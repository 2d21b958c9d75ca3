#include "dyncap/cli.hpp"

int main(int argc, char** argv) { return dyncap::cli_main(argc, argv); }
