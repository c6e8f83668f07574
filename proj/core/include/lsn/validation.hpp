#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lsn {

enum class SelftestLevel { Fast, Full };

/// One named analytic check: fails iff the measured value exceeds the
/// tolerance. `reference` names the invariant the check pins down.
struct CheckResult {
    std::string name;
    bool pass = false;
    double measured = 0.0;
    double tolerance = 0.0;
    std::string reference;
};

/// Cross-cutting self-test binding the library's analytic facts to
/// executable checks. Fast finishes in seconds; Full adds a short training
/// smoke run. Failures are returned as data, never thrown.
std::vector<CheckResult> run_selftest(SelftestLevel level);

/// Machine-readable results (one record per line) and a human summary.
void selftest_to_stream(std::ostream& out, const std::vector<CheckResult>& results);
void selftest_machine_file(std::ostream& out, const std::vector<CheckResult>& results);

}  // namespace lsn
