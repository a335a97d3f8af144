#include <cstdio>

// placeholder entry point; real subcommands land with the run layer
int main() {
  std::puts("sphfb: no subcommand given (expected: simulate | validate | sweep | report)");
  return 2;
}
