#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace duprg {

struct AdamWParams {
    double lr = 0.04;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 0.01;
};

/// AdamW with decoupled weight decay, matching the update order of torch.optim.AdamW:
///   p <- p * (1 - lr * wd)
///   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2
///   p <- p - lr / (1 - b1^t) * m / (sqrt(v) / sqrt(1 - b2^t) + eps)
/// Parameters are passed as a list of groups whose sizes must not change between steps.
class AdamW {
public:
    explicit AdamW(AdamWParams params) : params_(params) {}

    void step(std::span<const std::span<double>> parameters, std::span<const std::span<const double>> gradients);

    std::uint64_t steps() const noexcept { return step_; }
    const AdamWParams& params() const noexcept { return params_; }

private:
    AdamWParams params_;
    std::vector<std::vector<double>> moment1_;
    std::vector<std::vector<double>> moment2_;
    std::uint64_t step_ = 0;
};

} // namespace duprg
