#include "otbarrier/cli.hpp"

int main(int argc, char** argv) { return otb::run(argc, argv); }
