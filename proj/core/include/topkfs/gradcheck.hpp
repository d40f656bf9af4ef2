#pragma once

#include <string>
#include <vector>

namespace topkfs {

struct GradCheckResult {
    std::string name;
    double max_rel_error = 0.0;
    double tolerance = 0.0;
    bool passed = false;
};

/// Finite-difference verification of every differentiable op plus the full
/// scores-to-joint-loss pipeline on small fixed-seed toys. Each entry
/// compares reverse-mode gradients against central differences.
std::vector<GradCheckResult> gradcheck_suite();

}  // namespace topkfs
