#include <dissipcert/cli.hpp>

int main(int argc, char** argv) { return dissipcert::cli::run(argc, argv); }
