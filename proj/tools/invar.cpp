#include "invar/cli.hpp"

int main(int argc, char** argv) { return invar::cli::run(argc, argv); }
