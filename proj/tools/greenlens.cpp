#include "greenlens/cli.hpp"

int main(int argc, char** argv) { return greenlens::run_cli(argc, argv); }
