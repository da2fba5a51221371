#include "cli/commands.hpp"

int main(int argc, char** argv) { return octo::cli::main_entry(argc, argv); }
