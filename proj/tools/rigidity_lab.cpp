#include "rigidity/cli.hpp"

int main(int argc, char** argv) { return rigidity::run_cli(argc, argv); }
