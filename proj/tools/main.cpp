#include "cli.hpp"

int main(int argc, char** argv) { return pzflow::cli::run({argv + 1, argv + argc}); }
