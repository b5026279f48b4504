#pragma once

#include <iosfwd>

namespace scanline {

struct SelfTestOptions {
    // Test hook: corrupts one analytic Jacobian entry so the gradient suite
    // must fail; verifies the suite can actually catch regressions.
    bool perturb_jacobian = false;
    std::ostream* out = nullptr;  // per-suite pass/fail lines; null = silent
};

// Runs the oracle suites (trace identity, Jacobian vs finite differences,
// greedy vs brute force, variance oracle). Returns the number of failed
// suites, 0 when everything passes.
int run_selftest(const SelfTestOptions& options);

}  // namespace scanline
