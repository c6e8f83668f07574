#include <doctest.h>

#include <sstream>

#include "lsn/validation.hpp"

using namespace lsn;

TEST_CASE("fast selftest passes on a healthy build") {
    const auto results = run_selftest(SelftestLevel::Fast);
    CHECK(results.size() >= 20);
    for (const CheckResult& r : results) {
        CAPTURE(r.name);
        CAPTURE(r.measured);
        CAPTURE(r.tolerance);
        CHECK(r.pass);
    }
}

TEST_CASE("selftest output formats") {
    std::vector<CheckResult> results;
    results.push_back({"alpha.check", true, 1e-9, 1e-6, "invariant: alpha"});
    results.push_back({"beta.check", false, 2.0, 1.0, "invariant: beta"});

    std::ostringstream human;
    selftest_to_stream(human, results);
    CHECK(human.str().find("alpha.check") != std::string::npos);
    CHECK(human.str().find("PASS") != std::string::npos);
    CHECK(human.str().find("FAIL") != std::string::npos);
    CHECK(human.str().find("1/2 checks passed") != std::string::npos);

    std::ostringstream machine;
    selftest_machine_file(machine, results);
    CHECK(machine.str().rfind("name,pass,measured,tolerance,reference\n", 0) == 0);
    CHECK(machine.str().find("beta.check,0,") != std::string::npos);
}
