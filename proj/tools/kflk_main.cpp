#include "kflk/runner.hpp"

int main(int argc, char** argv) { return kflk::cli::run_cli(argc, argv); }
