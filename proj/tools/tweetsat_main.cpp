#include <iostream>

#include "tweetsat/cli.hpp"

int main(int argc, char** argv) { return tweetsat::run_cli(argc, argv, std::cout, std::cerr); }
