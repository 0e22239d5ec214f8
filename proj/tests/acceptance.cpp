// Runs every acceptance criterion at full size and prints one line per
// criterion. Exit status is non-zero if any criterion fails.
#include <iostream>

#include "torus_coulomb/parallel.hpp"
#include "torus_coulomb/verify.hpp"

int main() {
  using namespace torus_coulomb;
  verify::Options opt;
  opt.workers = max_workers();
  bool all = true;
  verify::run(opt, [&](const verify::CriterionResult& r) {
    std::cout << verify::format_line(r) << std::endl;
    all = all && r.passed;
  });
  std::cout << (all ? "ALL CRITERIA PASSED" : "SOME CRITERIA FAILED") << std::endl;
  return all ? 0 : 1;
}
