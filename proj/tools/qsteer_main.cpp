#include "qsteer/cli.hpp"

int main(int argc, char** argv) { return qsteer::run_cli(argc, argv); }
