#include "hitskt/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace hitskt {

GradCheckResult grad_check(
    const std::function<double()>& loss,
    const std::vector<std::pair<std::string, Tensor*>>& params, double eps,
    double floor, const std::function<bool()>& at_kink) {
    GradCheckResult res;
    for (const auto& [name, t] : params) {
        for (long i = 0; i < t->size(); ++i) {
            double analytic = t->grad()[i];
            double saved = t->data()[i];

            t->data()[i] = saved + eps;
            double up = loss();
            bool kink = at_kink && at_kink();
            t->data()[i] = saved - eps;
            double down = loss();
            kink = kink || (at_kink && at_kink());
            t->data()[i] = saved;

            if (kink) {
                ++res.flagged_kinks;
                continue;
            }
            double numeric = (up - down) / (2.0 * eps);
            double diff = std::fabs(analytic - numeric);
            double mag = std::max(std::fabs(analytic), std::fabs(numeric));
            ++res.checked;
            if (mag < floor) {
                res.max_abs_err = std::max(res.max_abs_err, diff);
            } else {
                double rel = diff / mag;
                if (rel > res.max_rel_err) {
                    res.max_rel_err = rel;
                    res.worst_entry = name + "[" + std::to_string(i) + "]";
                }
            }
        }
    }
    return res;
}

}  // namespace hitskt
