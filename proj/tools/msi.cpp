#include "msi/cli/commands.hpp"

int main(int argc, char** argv) { return msi::cli::run_command(argc, argv); }
