#include "mcbd/cli.hpp"

int main(int argc, char** argv) { return mcbd::cli::run(argc, argv); }
