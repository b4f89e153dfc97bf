#include <cstdlib>
#include <iostream>
#include <string>

#include "mobnet/acceptance.hpp"

// Usage: mobnet_acceptance [criterion ids...]
int main(int argc, char** argv) {
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  bool ok = true;
  mobnet::run_acceptance(mobnet::kAcceptanceSeed, only, [&](const mobnet::CriterionResult& r) {
    ok = ok && r.passed;
    std::cout << mobnet::format_line(r) << std::endl;
  });
  return ok ? 0 : 1;
}
