#include "fulllik_cli/cli.hpp"

int main(int argc, char** argv) { return fulllik::cli::main(argc, argv); }
