#include "cli.hpp"

int main(int argc, char** argv) { return tearlearn::cli::run(argc, argv); }
