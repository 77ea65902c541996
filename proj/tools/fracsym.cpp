#include "fracsym/cli.hpp"

int main(int argc, char** argv) { return fracsym::cli::run(argc, argv); }
