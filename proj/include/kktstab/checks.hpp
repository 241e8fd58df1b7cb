#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace kktstab {

struct CheckOutcome {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct SuiteReport {
  std::string suite;
  std::vector<CheckOutcome> checks;
  bool passed() const;
};

// KKTSTAB_FIXTURE_DIR from the environment, else the directory configured at build time.
std::string default_fixture_dir();
// Bare battery names ("nlp_toy") resolve inside the fixture directory; anything else is a path.
std::string resolve_instance_path(const std::string& name_or_path);

// The shipped battery and its roles in the equivalence cross-check.
const std::vector<std::string>& battery_names();
const std::vector<std::string>& positive_battery();
const std::vector<std::string>& negative_battery();

CheckOutcome check_prox_identities(std::uint64_t seed);
CheckOutcome check_element_properties(std::uint64_t seed);
CheckOutcome check_psd_derivative_and_gamma(std::uint64_t seed);
CheckOutcome check_newton_local();
CheckOutcome check_equivalence(std::uint64_t seed);
CheckOutcome check_critical_domain(std::uint64_t seed);
CheckOutcome check_assumptions(std::uint64_t seed);
CheckOutcome check_determinism(std::uint64_t seed);
CheckOutcome check_known_solutions();

SuiteReport run_prox_suite(std::uint64_t seed);
SuiteReport run_kkt_suite(std::uint64_t seed);

}  // namespace kktstab
