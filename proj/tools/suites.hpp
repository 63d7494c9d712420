#ifndef QFOCK_TOOLS_SUITES_HPP
#define QFOCK_TOOLS_SUITES_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "qfock/model.hpp"

namespace qfock::tools {

struct SuiteConfig {
  int nmax = 5;
  std::uint64_t seed = 1;
  // Suite whose identity gets a deliberate sign error (harness check of the exit status).
  std::string fault;
};

struct SuiteRow {
  std::string suite;
  std::string identity;
  int n = 0;
  bool exact_zero = false;
  std::string residual;
};

const std::vector<std::string>& suite_names();
// Throws UsageError if the suite does not exist, does not apply to the model or the
// requested sizes exceed a budget. Run before any suite starts.
void check_budget(const std::string& suite, const ProcessModel& m, const SuiteConfig& cfg);
std::vector<SuiteRow> run_suite(const std::string& suite, const ProcessModel& m, const SuiteConfig& cfg);

}  // namespace qfock::tools

#endif  // QFOCK_TOOLS_SUITES_HPP
