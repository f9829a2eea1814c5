#include "dentlab/cli.hpp"

int main(int argc, char** argv) { return dentlab::cli::run(argc, argv); }
