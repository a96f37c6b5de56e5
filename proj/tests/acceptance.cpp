// Acceptance runner: `acceptance` runs every criterion, `acceptance 3 5`
// selected ones. Exit status is nonzero if any selected criterion fails.

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "pdwave/acceptance.hpp"

int main(int argc, char** argv) {
  std::vector<int> ids;
  for (int i = 1; i < argc; ++i) ids.push_back(std::stoi(argv[i]));
  if (ids.empty())
    for (int i = 1; i <= pdwave::acceptance::kCriteria; ++i) ids.push_back(i);

  bool all = true;
  for (int id : ids) {
    const auto r = pdwave::acceptance::run_criterion(id);
    pdwave::acceptance::print(std::cout, r);
    all = all && r.pass();
  }
  return all ? EXIT_SUCCESS : EXIT_FAILURE;
}
