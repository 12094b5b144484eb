#include "pamso/cli.hpp"

int main(int argc, char** argv) { return pamso::cli::run(argc, argv); }
