#include "slicematch/cli.h"

int main(int argc, char** argv) { return slicematch::run_cli(argc, argv); }
