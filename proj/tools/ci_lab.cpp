#include "cilab/run.hpp"

int main(int argc, char** argv) { return cilab::cli_main(argc, argv); }
