#include "duprg/cae.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace duprg;

namespace {

struct Parts {
    double rec, intra, inter;
};

// Loss terms via the test-only scalar references, so the finite differences do not
// reuse any of the library's loss code.
Parts reference_parts(const CaeModel& model, const PromptTensor& t, ReconLoss kind) {
    const Matrix y = oracle::ref_forward(model, t.data);
    const std::size_t M = t.domains(), C = t.classes();
    return {kind == ReconLoss::cosine ? oracle::ref_loss_rec(t.data, y) : oracle::ref_loss_rec_l2(t.data, y),
            oracle::ref_loss_intra(y, M, C), oracle::ref_loss_inter(y, M, C)};
}

struct Instance {
    PromptTensor prompts;
    CaeModel model;
    ReconLoss kind;
};

Instance make_instance(std::mt19937_64& rng, std::size_t index) {
    const std::size_t d = 2 + rng() % 15;
    const std::size_t M = 1 + rng() % 4;
    const std::size_t C = 2 + rng() % 4;
    CaeConfig cfg;
    cfg.seed = rng();
    cfg.hidden = 2 + rng() % 10;
    cfg.latent = 1 + rng() % 6;
    cfg.recon_loss = index % 5 == 4 ? ReconLoss::l2 : ReconLoss::cosine;
    Instance inst{oracle::random_prompts(rng, M, C, d), init_model(d, cfg), cfg.recon_loss};
    // Nonzero biases so that their gradients are exercised away from the init point.
    std::normal_distribution<double> g(0.0, 0.1);
    for (auto& layer : inst.model.layers)
        for (double& b : layer.bias) b = g(rng);
    return inst;
}

// Central differences with h = 1e-5 carry ~1e-11 of round-off, so the denominator is
// floored at 1e-6; below that the check is effectively absolute at 1e-10.
double relative_error(double analytic, double numeric) {
    const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    return std::abs(analytic - numeric) / scale;
}

} // namespace

TEST(CaeGradients, MatchCentralDifferencesOverLambdaGrid) {
    std::mt19937_64 rng(20240601);
    constexpr double h = 1e-5;
    const double grid[] = {0.0, 0.5, 1.0};
    double worst = 0.0;
    for (std::size_t n = 0; n < 20; ++n) {
        Instance inst = make_instance(rng, n);

        // Finite differences of each loss term once per parameter; L_all is linear in the terms.
        std::array<LayerStack, 3> numeric = {zeros_like(inst.model), zeros_like(inst.model), zeros_like(inst.model)};
        for (std::size_t l = 0; l < kCaeLayers; ++l) {
            auto probe = [&](double& param, double& n_rec, double& n_intra, double& n_inter) {
                const double saved = param;
                param = saved + h;
                const Parts plus = reference_parts(inst.model, inst.prompts, inst.kind);
                param = saved - h;
                const Parts minus = reference_parts(inst.model, inst.prompts, inst.kind);
                param = saved;
                n_rec = (plus.rec - minus.rec) / (2 * h);
                n_intra = (plus.intra - minus.intra) / (2 * h);
                n_inter = (plus.inter - minus.inter) / (2 * h);
            };
            for (std::size_t i = 0; i < inst.model.layers[l].weight.data.size(); ++i) {
                probe(inst.model.layers[l].weight.data[i], numeric[0][l].weight.data[i],
                      numeric[1][l].weight.data[i], numeric[2][l].weight.data[i]);
            }
            for (std::size_t i = 0; i < inst.model.layers[l].bias.size(); ++i) {
                probe(inst.model.layers[l].bias[i], numeric[0][l].bias[i], numeric[1][l].bias[i],
                      numeric[2][l].bias[i]);
            }
        }

        for (double l1 : grid) {
            for (double l2 : grid) {
                CaeConfig cfg = inst.model.config;
                cfg.lambda1 = l1;
                cfg.lambda2 = l2;
                LayerStack analytic;
                loss_and_gradients(inst.model, inst.prompts, cfg, analytic);
                for (std::size_t l = 0; l < kCaeLayers; ++l) {
                    auto check = [&](double a, double r, double i, double e, const char* what, std::size_t idx) {
                        const double num = r + l1 * i + l2 * e;
                        const double err = relative_error(a, num);
                        worst = std::max(worst, err);
                        ASSERT_LT(err, 1e-4) << "instance " << n << " lambda=(" << l1 << "," << l2 << ") layer " << l
                                             << ' ' << what << '[' << idx << "] analytic " << a << " numeric " << num;
                    };
                    for (std::size_t i = 0; i < analytic[l].weight.data.size(); ++i) {
                        check(analytic[l].weight.data[i], numeric[0][l].weight.data[i], numeric[1][l].weight.data[i],
                              numeric[2][l].weight.data[i], "W", i);
                    }
                    for (std::size_t i = 0; i < analytic[l].bias.size(); ++i) {
                        check(analytic[l].bias[i], numeric[0][l].bias[i], numeric[1][l].bias[i], numeric[2][l].bias[i],
                              "b", i);
                    }
                }
            }
        }
    }
    RecordProperty("worst_relative_error", std::to_string(worst));
}

TEST(CaeGradients, OutputGradientMatchesDifferencesOfScalarLosses) {
    std::mt19937_64 rng(99);
    constexpr double h = 1e-6;
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t M = 1 + rng() % 4, C = 2 + rng() % 4, d = 2 + rng() % 8;
        const auto t = oracle::random_prompts(rng, M, C, d);
        Matrix y = oracle::random_matrix(rng, M * C, d);
        CaeConfig cfg;
        cfg.lambda1 = 0.7;
        cfg.lambda2 = 0.3;
        Matrix grad;
        loss_all_grad(t.data, y, M, C, cfg, grad);
        for (std::size_t i = 0; i < y.data.size(); ++i) {
            const double saved = y.data[i];
            y.data[i] = saved + h;
            const double plus = oracle::ref_loss_all(t.data, y, M, C, cfg);
            y.data[i] = saved - h;
            const double minus = oracle::ref_loss_all(t.data, y, M, C, cfg);
            y.data[i] = saved;
            EXPECT_LT(relative_error(grad.data[i], (plus - minus) / (2 * h)), 1e-4);
        }
    }
}
