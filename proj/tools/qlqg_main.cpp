#include "commands.hpp"

int main(int argc, char** argv) { return qlqg::cli::run(argc, argv); }
