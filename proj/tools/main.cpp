#include "halfratio/cli.hpp"

int main(int argc, char** argv) { return halfratio::cli::dispatch(argc, argv); }
