#include "daur/cli.hpp"

int main(int argc, char** argv) { return daur::cli::run_main(argc, argv); }
