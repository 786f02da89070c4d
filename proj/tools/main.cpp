#include "commands.hpp"

int main(int argc, char** argv) { return sharpen::cli::run(argc, argv); }
