#include "kinmarket/cli.hpp"

int main(int argc, char** argv) { return kinmarket::cli::main(argc, argv); }
