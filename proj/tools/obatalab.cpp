#include "obatalab/cli.hpp"

int main(int argc, char** argv) { return obatalab::cli::main_entry(argc, argv); }
