#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "hitskt/tensor.hpp"

namespace hitskt {

// Central finite-difference check of analytic gradients.
//
// The caller runs its analytic backward pass first so that each tensor's grad
// buffer holds dL/dtheta, then hands over a pure loss closure. Every entry of
// every tensor is perturbed by +/- eps and compared against the stored
// gradient. Entries where both gradients are below `floor` in magnitude are
// judged by absolute difference (finite differences drown in rounding noise
// near zero); the rest by relative error. `at_kink` lets piecewise-linear ops
// flag evaluations next to a non-differentiable point: such entries are
// reported, not failed.
struct GradCheckResult {
    double max_rel_err = 0.0;
    double max_abs_err = 0.0;
    std::string worst_entry;  // "name[i]" of the worst relative error
    long checked = 0;
    long flagged_kinks = 0;

    bool ok(double rel_tol, double abs_tol = 1e-6) const {
        return max_rel_err < rel_tol && max_abs_err < abs_tol;
    }
};

GradCheckResult grad_check(
    const std::function<double()>& loss,
    const std::vector<std::pair<std::string, Tensor*>>& params,
    double eps = 1e-6, double floor = 1e-6,
    const std::function<bool()>& at_kink = nullptr);

}  // namespace hitskt
