#include "entyper/cli.hpp"

int main(int argc, char** argv) { return entyper::cli::run(argc, argv); }
