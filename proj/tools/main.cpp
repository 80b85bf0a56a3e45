#include "bincma/cli.hpp"

int main(int argc, char** argv) { return bincma::cli::run_cli(argc, argv); }
