#include "afem/cli.hpp"

int main(int argc, char** argv) { return afem::afem_cli_main(argc, argv); }
