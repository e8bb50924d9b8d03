#include "docgraph/cli.hpp"

int main(int argc, char** argv) { return docgraph::cli::run(argc, argv); }
