#include "duprg/adamw.hpp"

#include "duprg/errors.hpp"

#include <cmath>

namespace duprg {

void AdamW::step(std::span<const std::span<double>> parameters,
                 std::span<const std::span<const double>> gradients) {
    if (parameters.size() != gradients.size()) {
        throw DimensionError("adamw: parameter/gradient group count mismatch");
    }
    if (moment1_.empty()) {
        for (const auto& p : parameters) {
            moment1_.emplace_back(p.size(), 0.0);
            moment2_.emplace_back(p.size(), 0.0);
        }
    }
    if (moment1_.size() != parameters.size()) {
        throw DimensionError("adamw: parameter groups changed between steps");
    }

    ++step_;
    const double t = static_cast<double>(step_);
    const double bias_correction1 = 1.0 - std::pow(params_.beta1, t);
    const double bias_correction2 = 1.0 - std::pow(params_.beta2, t);
    const double step_size = params_.lr / bias_correction1;
    const double bias_correction2_sqrt = std::sqrt(bias_correction2);
    const double decay = 1.0 - params_.lr * params_.weight_decay;

    for (std::size_t g = 0; g < parameters.size(); ++g) {
        auto p = parameters[g];
        auto grad = gradients[g];
        auto& m = moment1_[g];
        auto& v = moment2_[g];
        if (p.size() != grad.size() || p.size() != m.size()) {
            throw DimensionError("adamw: group " + std::to_string(g) + " size mismatch");
        }
        for (std::size_t i = 0; i < p.size(); ++i) {
            p[i] *= decay;
            m[i] = params_.beta1 * m[i] + (1.0 - params_.beta1) * grad[i];
            v[i] = params_.beta2 * v[i] + (1.0 - params_.beta2) * grad[i] * grad[i];
            const double denom = std::sqrt(v[i]) / bias_correction2_sqrt + params_.epsilon;
            p[i] -= step_size * m[i] / denom;
        }
    }
}

} // namespace duprg
