#pragma once

#include <string>
#include <vector>

#include "plastlab/io.hpp"

// Post-hoc audit of a finished run directory. Checks are layered: artifact
// integrity and hash agreement first, then pointwise invariants of the
// stored fields, then replay-based checks (convexity battery, flow rule,
// byte-exact determinism). A failed prerequisite skips its dependents rather
// than cascading into spurious failures.

namespace plastlab {

enum class CheckStatus { Pass, Fail, Skip };

struct CheckResult {
    std::string name;
    CheckStatus status = CheckStatus::Skip;
    double measured = 0.0;   // worst observed value, check-specific units
    double tolerance = 0.0;  // bound it was compared against
    std::string detail;      // human-readable amplification
};

struct VerifyReport {
    std::vector<CheckResult> checks;
    bool ok = false;  // true iff no check failed
};

VerifyReport verify_run(const std::string& dir);

// Aligned-column text (one line per check) and machine-readable JSON.
std::string verify_text(const VerifyReport& rep);
std::string verify_json(const VerifyReport& rep);

}  // namespace plastlab
