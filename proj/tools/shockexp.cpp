#include "shockexp/cli.hpp"

int main(int argc, char** argv) { return shockexp::run_cli(argc, argv); }
