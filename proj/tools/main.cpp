#include <string>
#include <vector>

#include "hinclus/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return hinclus::run_cli(args);
}
