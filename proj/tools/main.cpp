#include "commands.hpp"

int main(int argc, char** argv) { return blurvid::cli::main_entry(argc, argv); }
