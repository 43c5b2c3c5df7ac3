#include "dsg/cli.hpp"

int main(int argc, char** argv) { return dsg::run_cli(argc, argv); }
