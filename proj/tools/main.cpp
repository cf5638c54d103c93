#include "ncfb/cli.hpp"

int main(int argc, char** argv) { return ncfb::cli::main_entry(argc, argv); }
