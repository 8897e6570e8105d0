#include "srmcf/app.hpp"

int main(int argc, char** argv) { return srmcf::run_cli(argc, argv); }
