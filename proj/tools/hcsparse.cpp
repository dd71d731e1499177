#include "hcsparse/cli.hpp"

int main(int argc, char** argv) { return hcsparse::cli::run(argc, argv); }
