#include "commands.hpp"

int main(int argc, char** argv) { return winnet::cli::run_cli(argc, argv); }
