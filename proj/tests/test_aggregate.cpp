#include "duprg/aggregate.hpp"
#include "duprg/errors.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

using namespace duprg;

TEST(MeanPool, SingleDomainIsIdentity) {
    std::mt19937_64 rng(1);
    const auto t = oracle::random_prompts(rng, 1, 5, 9);
    const auto reps = mean_pool(t);
    EXPECT_EQ(reps.data, t.data);
    EXPECT_EQ(reps.class_names, t.class_names);
}

TEST(MeanPool, TwoBasisVectors) {
    PromptTensor t;
    t.dims = 3;
    t.domain_names = {"a", "b"};
    t.class_names = {"x", "y"};
    t.data = Matrix(4, 3);
    t.data(0, 0) = 1; // domain a, class x
    t.data(2, 1) = 1; // domain b, class x
    t.data(1, 2) = 1;
    t.data(3, 2) = 1;
    const auto reps = mean_pool(t);
    EXPECT_EQ(reps.data.row(0)[0], 0.5);
    EXPECT_EQ(reps.data.row(0)[1], 0.5);
    EXPECT_EQ(reps.data.row(0)[2], 0.0);
    EXPECT_EQ(reps.data.row(1)[2], 1.0);
}

TEST(MeanPool, MatchesScalarLoop) {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t M = 1 + rng() % 8, C = 2 + rng() % 6, d = 2 + rng() % 40;
        const auto t = oracle::random_prompts(rng, M, C, d);
        const auto reps = mean_pool(t);
        const Matrix ref = oracle::ref_class_means(t.data, M, C);
        for (std::size_t i = 0; i < ref.data.size(); ++i) EXPECT_NEAR(reps.data.data[i], ref.data[i], 1e-12);
    }
}

TEST(MeanPool, DomainPermutationInvariant) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t M = 2 + rng() % 6, C = 2 + rng() % 4, d = 3 + rng() % 10;
        const auto t = oracle::random_prompts(rng, M, C, d);
        std::vector<std::size_t> perm(M);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        PromptTensor p = t;
        for (std::size_t j = 0; j < M; ++j) {
            p.domain_names[j] = t.domain_names[perm[j]];
            for (std::size_t i = 0; i < C; ++i) {
                std::copy(t.data.row(perm[j] * C + i).begin(), t.data.row(perm[j] * C + i).end(),
                          p.data.row(j * C + i).begin());
            }
        }
        const auto a = mean_pool(t);
        const auto b = mean_pool(p);
        for (std::size_t i = 0; i < a.data.data.size(); ++i) EXPECT_NEAR(a.data.data[i], b.data.data[i], 1e-12);

        CaeConfig cfg;
        cfg.seed = trial;
        const auto model = init_model(d, cfg);
        const auto ca = cae_unify(t, model);
        const auto cb = cae_unify(p, model);
        for (std::size_t i = 0; i < ca.data.data.size(); ++i) EXPECT_NEAR(ca.data.data[i], cb.data.data[i], 1e-12);
    }
}

TEST(CaeUnify, IsMeanPoolOfForwardExactly) {
    std::mt19937_64 rng(4);
    const auto t = oracle::random_prompts(rng, 4, 3, 10);
    CaeConfig cfg;
    cfg.seed = 17;
    const auto model = init_model(10, cfg);
    PromptTensor fwd = t;
    fwd.data = forward(model, t);
    EXPECT_EQ(cae_unify(t, model).data, mean_pool(fwd.data, 4, t.class_names).data);
}

TEST(CaeUnify, SingleDomainIsForward) {
    std::mt19937_64 rng(5);
    const auto t = oracle::random_prompts(rng, 1, 3, 6);
    const auto model = init_model(6, CaeConfig{});
    EXPECT_EQ(cae_unify(t, model).data, forward(model, t));
}

TEST(CaeUnify, IdentityTrainedModelApproximatesMeanPool) {
    // Oracle: first train an autoencoder that reproduces its input under L2, then check unify.
    std::mt19937_64 rng(6);
    const auto t = oracle::random_prompts(rng, 3, 2, 6);
    CaeConfig cfg;
    cfg.recon_loss = ReconLoss::l2;
    cfg.lambda1 = 0;
    cfg.lambda2 = 0;
    cfg.weight_decay = 0;
    cfg.lr = 0.005;
    cfg.hidden = 32;
    cfg.latent = 16;
    cfg.epochs = 2000;
    const auto trained = train(t, cfg);
    ASSERT_LT(trained.report.final_losses.rec, 1e-6);
    const auto mp = mean_pool(t);
    const auto cae = cae_unify(t, trained.model);
    for (std::size_t i = 0; i < mp.data.data.size(); ++i) EXPECT_NEAR(cae.data.data[i], mp.data.data[i], 1e-3);
}

TEST(CaeUnify, DimensionMismatch) {
    std::mt19937_64 rng(7);
    const auto t = oracle::random_prompts(rng, 2, 2, 5);
    EXPECT_THROW(cae_unify(t, init_model(6, CaeConfig{})), DimensionError);
}
