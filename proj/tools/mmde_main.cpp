#include <string>
#include <vector>

#include "mmde/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return mmde::run_command(args);
}
