#include "epimi/cli.hpp"

int main(int argc, char** argv) { return epimi::run_cli(argc, argv); }
