#include "fracdtn/cli.hpp"

int main(int argc, char** argv) { return fracdtn::cli_main(argc, argv); }
