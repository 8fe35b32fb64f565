#include "cli/run.hpp"

int main(int argc, char** argv) { return erobot::cli::run(argc, argv); }
