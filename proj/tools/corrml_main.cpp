#include "corrml/cli.hpp"

int main(int argc, char** argv) { return corrml::cli_run(argc, argv); }
