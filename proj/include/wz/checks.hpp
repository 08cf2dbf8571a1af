#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace wz::checks {

struct CheckResult {
    std::string name;
    bool pass = false;
    double value = 0.0;      ///< measured residual or ratio
    double tolerance = 0.0;  ///< pass iff value <= tolerance
    std::string detail;
};

/// Names of every invariant in suite order.
std::vector<std::string> check_names();

/// Runs the selected invariants ("all" selects every one). An empty selection throws
/// std::invalid_argument("no checks selected"); unknown names throw as well.
/// Names listed in fault_injection get deliberately corrupted inputs.
std::vector<CheckResult> run_checks(const std::vector<std::string>& selection, std::uint64_t seed,
                                    const std::vector<std::string>& fault_injection = {});

}  // namespace wz::checks
