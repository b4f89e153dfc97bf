#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace mobnet {

// Seed fixed before any acceptance run; criterion k uses derive_seed(seed, {k}).
constexpr std::uint64_t kAcceptanceSeed = 20261015;

struct CriterionResult {
  int id;
  std::string name;
  bool passed;
  std::string detail;
  double seconds;
  double time_limit;  // seconds, 0 when none applies
};

using CriterionSink = std::function<void(const CriterionResult&)>;

// Runs the twelve criteria (or the listed ones) and calls `sink` after each.
std::vector<CriterionResult> run_acceptance(std::uint64_t seed = kAcceptanceSeed, const std::vector<int>& only = {},
                                            const CriterionSink& sink = {});

// "PASS  3  exact pathwise couplings  (12.1 s)  detail"
std::string format_line(const CriterionResult& r);

}  // namespace mobnet
