// Acceptance suite: one PASS/FAIL line per criterion, exit 0 iff all pass.
// BSHIFT_ACCEPTANCE_SCALE=N divides every sample count by N for a quick run.

#include <cstdio>
#include <cstdlib>
#include <string>

#include "bshift/acceptance.hpp"

using namespace bshift;

int main(int argc, char** argv) {
  acceptance::Config cfg;
  if (const char* s = std::getenv("BSHIFT_ACCEPTANCE_SCALE")) cfg = cfg.scaled_down(std::stoul(s));
  std::vector<int> which;
  for (int i = 1; i < argc; ++i) which.push_back(std::atoi(argv[i]));

  std::printf("acceptance: %u worker thread(s), seed %s\n", thread_count(), cfg.seed.hex().c_str());
  const auto results = acceptance::run(cfg, which, [](const acceptance::CriterionResult& r) {
    std::printf("criterion %d: %s (%.1f s)\n", r.id, r.title.c_str(), r.seconds);
    for (const auto& c : r.checks)
      std::printf("    [%s] %s: %s\n", c.pass ? "ok" : "FAIL", c.name.c_str(), c.detail.c_str());
    std::fflush(stdout);
  });

  int failed = 0;
  double total = 0;
  std::printf("\nsummary\n");
  for (const auto& r : results) {
    std::printf("%s  criterion %2d  %s\n", r.pass() ? "PASS" : "FAIL", r.id, r.title.c_str());
    failed += r.pass() ? 0 : 1;
    total += r.seconds;
  }
  std::printf("%d of %zu criteria passed in %.0f s\n", static_cast<int>(results.size()) - failed, results.size(), total);
  return failed == 0 ? 0 : 1;
}
