#include "tsslab/cli.hpp"

int main(int argc, char** argv) { return tsslab::run_cli(argc, argv); }
