#include "cli.hpp"

int main(int argc, char** argv) { return nlscli::run_command(argc, argv); }
