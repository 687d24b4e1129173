#include "cwds/cli.hpp"

int main(int argc, char** argv) { return cwds::cli::cli_main(argc, argv); }
