#include "w4mu/finite_diff.hpp"

#include <cmath>

#include "w4mu/errors.hpp"

namespace w4mu {

GradMap finite_diff_grad(const std::function<double(const ParamSet&)>& f, const ParamSet& params,
                         double h) {
    if (!(h > 0.0)) throw ValidationError("finite_diff_grad: h must be positive");
    ParamSet work = params;
    GradMap out;
    for (std::size_t e = 0; e < work.entries.size(); ++e) {
        auto& [key, t] = work.entries[e];
        Tensor g(t.shape);
        for (std::size_t i = 0; i < t.size(); ++i) {
            double orig = t[i];
            t[i] = orig + h;
            double fp = f(work);
            t[i] = orig - h;
            double fm = f(work);
            t[i] = orig;
            if (!std::isfinite(fp) || !std::isfinite(fm))
                throw NumericError("finite_diff_grad: non-finite value at '" + key + "'[" +
                                   std::to_string(i) + "]");
            g[i] = (fp - fm) / (2.0 * h);
        }
        out.emplace(key, std::move(g));
    }
    return out;
}

std::vector<double> finite_diff_grad_flat(
    const std::function<double(const std::vector<double>&)>& f, const std::vector<double>& x,
    double h) {
    if (!(h > 0.0)) throw ValidationError("finite_diff_grad_flat: h must be positive");
    std::vector<double> work = x;
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        double orig = work[i];
        work[i] = orig + h;
        double fp = f(work);
        work[i] = orig - h;
        double fm = f(work);
        work[i] = orig;
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw NumericError("finite_diff_grad_flat: non-finite value at coordinate " +
                               std::to_string(i));
        out[i] = (fp - fm) / (2.0 * h);
    }
    return out;
}

}  // namespace w4mu
