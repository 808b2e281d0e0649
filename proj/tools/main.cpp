#include "gmq/cli.hpp"

int main(int argc, char** argv) { return gmq::run_cli(argc, argv); }
