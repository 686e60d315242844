#include "sfp/cli.hpp"

int main(int argc, char** argv) { return sfp::cli::run_cli(argc, argv); }
