#include "shockpanel/cli.hpp"

int main(int argc, char** argv) { return shockpanel::cli::run(argc, argv); }
