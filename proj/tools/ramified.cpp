#include "ramified/cli.hpp"

int main(int argc, char** argv) { return ramified::run_cli(argc, argv); }
