#include "mwgan/cli.hpp"

int main(int argc, char** argv) { return mwgan::cli_main(argc, argv); }
