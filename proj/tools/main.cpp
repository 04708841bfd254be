#include "cli.hpp"

int main(int argc, char** argv) { return boltzinv::cli::dispatch(argc, argv); }
