#include "palmrt/cli.hpp"

int main(int argc, char** argv) { return palmrt::cli::run(argc, argv); }
