#include "ltrajdiff/cli.hpp"

int main(int argc, char** argv) { return ltrajdiff::run_cli(argc, argv); }
