#include "netfd/cli.hpp"

int main(int argc, char** argv) { return netfd::cli::run(argc, argv); }
