#include "stgconvnet/cli.hpp"

int main(int argc, char** argv) { return stg::dispatch(argc, argv); }
