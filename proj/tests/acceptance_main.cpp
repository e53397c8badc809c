#include <cstdio>
#include <cstdlib>
#include <string>

#include "advfront/acceptance.hpp"

// Prints one line per criterion; exits nonzero when any criterion fails.
int main(int argc, char** argv) {
  advfront::AcceptanceOptions opt;
  for (int k = 1; k < argc; ++k) opt.only.push_back(std::atoi(argv[k]));
  opt.on_result = [](const advfront::CriterionResult& r) {
    std::printf("%s\n", advfront::format_line(r).c_str());
    for (const auto& n : r.notes) std::printf("    note: %s\n", n.c_str());
    std::printf("    time: %.1f s\n", r.seconds);
    std::fflush(stdout);
  };
  int failed = 0;
  for (const auto& r : advfront::run_acceptance(opt)) failed += r.pass ? 0 : 1;
  std::printf("%d criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
