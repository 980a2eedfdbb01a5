#include "choicert/cli.hpp"

int main(int argc, char** argv) { return choicert::cli::run_cli(argc, argv, std::cout, std::cerr); }
