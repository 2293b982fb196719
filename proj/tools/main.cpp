#include "pdereg/cli.hpp"

int main(int argc, char** argv) { return pdereg::cli::run(argc, argv); }
