#include "morita/cli.hpp"

int main(int argc, char** argv) { return morita::cli::main(argc, argv); }
