#pragma once

#include <ostream>
#include <string>
#include <vector>

// Named invariant suite covering every module, shared by the CLI selftest
// subcommand and the acceptance harness. Each check is independent and
// failures are captured per check rather than aborting the run.

namespace weylscope::selfcheck {

struct CheckResult {
  std::string name;
  bool pass = false;
  double seconds = 0.0;
  std::string note;  // headline number when passing, reason when failing
};

std::vector<CheckResult> run_all(std::ostream* log = nullptr);

bool all_passed(const std::vector<CheckResult>& results);

}  // namespace weylscope::selfcheck
