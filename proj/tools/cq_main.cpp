#include "cq/cli.hpp"

int main(int argc, char** argv) { return cq::cli::dispatch(argc, argv); }
