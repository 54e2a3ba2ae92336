#include "passlab/cli.hpp"

int main(int argc, char** argv) { return passlab::cli_dispatch(argc, argv); }
