// One line per acceptance criterion; exit status 1 if any fails.

#include <cstdio>
#include <string>
#include <vector>

#include "ysm/cli.hpp"

int main(int argc, char** argv) {
  ysm::acceptance::Context ctx;
  ctx.seed = ysm::acceptance::kDefaultSeed;
  ctx.threads = ysm::default_threads();
  ctx.simulate_bytes = [seed = ctx.seed](unsigned threads) { return ysm::cli::determinism_probe(seed, threads); };

  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::stoi(argv[i]));

  int failed = 0;
  ysm::acceptance::run_all(ctx, only, [&](const ysm::acceptance::CriterionResult& r) {
    failed += !r.passed;
    std::printf("[%s] %2d %-34s %7.2fs  %s\n", r.passed ? "PASS" : "FAIL", r.id, r.name.c_str(), r.seconds,
                r.summary.c_str());
    std::fflush(stdout);
  });
  std::printf("%d criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
