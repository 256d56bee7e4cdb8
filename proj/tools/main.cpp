#include "cli/commands.hpp"

int main(int argc, char** argv) { return sill::cli::run_cli(argc, argv); }
