#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pclab {

struct CheckResult {
    std::string name;
    std::string tolerance;  // human-readable threshold the check enforces
    bool passed = false;
    std::string detail;
};

// The invariant suite behind the `check` subcommand: finite-difference
// gradient checks, Z-IL and FPA equalities, the propagation-bound trace, the
// complexity-bound property test, and the variance-scaling identity.
// `inject_vjp_fault` flips the sign of every layer VJP for the duration of
// the suite, to demonstrate that a broken engine is caught.
std::vector<CheckResult> run_check_suite(std::uint64_t seed,
                                         bool inject_vjp_fault = false);

bool all_passed(const std::vector<CheckResult>& results);

}  // namespace pclab
