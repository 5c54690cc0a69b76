#include "pbpk/commands.hpp"

int main(int argc, char** argv) { return pbpk::cli::run(argc, argv); }
