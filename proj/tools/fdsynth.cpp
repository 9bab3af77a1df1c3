#include "fdctmc/io.hpp"

int main(int argc, char** argv) { return fdctmc::cli_main(argc, argv); }
