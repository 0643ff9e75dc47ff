#include <cstdlib>
#include <iostream>
#include <string>

#include "exphormer/suites.hpp"

// Runs every acceptance criterion at full size and prints one verdict line
// per criterion. Exit status is non-zero when any criterion fails.
int main(int argc, char** argv) {
  exphormer::SuiteOptions opts;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--quick") {
      opts.quick = true;
    } else if (arg == "--seed" && i + 1 < argc) {
      opts.seed = std::stoull(argv[++i]);
    } else {
      std::cerr << "usage: acceptance [--quick] [--seed S]\n";
      return 2;
    }
  }

  const auto results = exphormer::run_suites("all", opts);
  bool all_passed = true;
  for (const auto& r : results) {
    for (const auto& [key, value] : r.metrics) std::cout << "  [" << r.criterion << "] " << key << " = " << value << '\n';
  }
  std::cout << '\n';
  for (const auto& r : results) {
    all_passed = all_passed && r.passed;
    std::cout << "criterion " << r.criterion << " (" << r.name << "): " << (r.passed ? "PASS" : "FAIL") << "  ["
              << r.seconds << " s]\n";
  }
  std::cout << (all_passed ? "ALL CRITERIA PASS" : "SOME CRITERIA FAIL") << '\n';
  return all_passed ? EXIT_SUCCESS : EXIT_FAILURE;
}
