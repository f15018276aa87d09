#include "holdlab/cli.hpp"

int main(int argc, char** argv) { return holdlab::cli_main(argc, argv); }
