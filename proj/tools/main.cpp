#include "commands.hpp"

int main(int argc, char** argv) { return topkfs::cli::run_main(argc, argv); }
