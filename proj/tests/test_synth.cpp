#include "duprg/aggregate.hpp"
#include "duprg/cae.hpp"
#include "duprg/classify.hpp"
#include "duprg/errors.hpp"
#include "duprg/synth.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace duprg;

TEST(Synth, ShapesAndUnitRows) {
    const SynthSpec spec;
    const auto data = generate(spec);
    EXPECT_EQ(data.prompts.domains(), 8u);
    EXPECT_EQ(data.prompts.classes(), 5u);
    EXPECT_EQ(data.prompts.dims, 64u);
    EXPECT_EQ(data.images.size(), 2u * 5u * 50u);
    EXPECT_NO_THROW(validate(data.prompts));
    EXPECT_NO_THROW(validate(data.images));
    for (std::size_t r = 0; r < data.prompts.data.rows; ++r) EXPECT_NEAR(norm(data.prompts.data.row(r)), 1.0, 1e-12);
    for (std::size_t r = 0; r < data.images.data.rows; ++r) EXPECT_NEAR(norm(data.images.data.row(r)), 1.0, 1e-12);
    // Orthonormal anchors when class_sep = 1.
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t k = 0; k < 5; ++k)
            EXPECT_NEAR(dot(data.oracle.data.row(i), data.oracle.data.row(k)), i == k ? 1.0 : 0.0, 1e-12);
}

TEST(Synth, SameSeedBitwiseIdentical) {
    SynthSpec spec;
    spec.seed = 12;
    const auto a = generate(spec);
    const auto b = generate(spec);
    EXPECT_EQ(a.prompts, b.prompts);
    EXPECT_EQ(a.images, b.images);
    EXPECT_EQ(a.oracle, b.oracle);
    spec.seed = 13;
    EXPECT_NE(generate(spec).prompts.data, a.prompts.data);
}

TEST(Synth, DegenerateNoShiftNoNoise) {
    SynthSpec spec;
    spec.domain_shift = 0;
    spec.noise = 0;
    const auto data = generate(spec);
    const auto mp = mean_pool(data.prompts);
    for (std::size_t i = 0; i < data.oracle.data.data.size(); ++i)
        EXPECT_NEAR(mp.data.data[i], data.oracle.data.data[i], 1e-12);
    EXPECT_EQ(evaluate(mp, data.images).accuracy, 1.0);
    EXPECT_NEAR(intra_class_tightness(data.prompts), 1.0, 1e-12);
}

TEST(Synth, SmallShiftNoNoiseOracleIsPerfect) {
    SynthSpec spec;
    spec.domain_shift = 0.1;
    spec.noise = 0;
    const auto data = generate(spec);
    EXPECT_EQ(evaluate(data.oracle, data.images).accuracy, 1.0);
}

// Frozen from the brute-force scalar classifier in test_support.hpp (libstdc++
// mt19937_64 + normal_distribution streams).
TEST(Synth, FrozenReferenceAccuracies) {
    const auto data = generate(SynthSpec{});
    EXPECT_EQ(oracle::ref_accuracy(data.oracle.data, data.images), 1.0);
    EXPECT_EQ(oracle::ref_accuracy(mean_pool(data.prompts).data, data.images), 1.0);
    EXPECT_EQ(evaluate(mean_pool(data.prompts), data.images).accuracy, 1.0);

    SynthSpec hard;
    hard.domain_shift = 1.5;
    hard.noise = 3.0;
    const auto h = generate(hard);
    EXPECT_EQ(oracle::ref_accuracy(h.oracle.data, h.images), 421.0 / 500.0);
    EXPECT_EQ(evaluate(h.oracle, h.images).correct, 421u);
    EXPECT_EQ(evaluate(mean_pool(h.prompts), h.images).correct, 419u);
}

TEST(Synth, SpecValidation) {
    SynthSpec spec;
    spec.classes = 1;
    EXPECT_THROW(generate(spec), ValidationError);
    spec = {};
    spec.dims = 4;
    EXPECT_THROW(generate(spec), ValidationError);
    spec = {};
    spec.noise = -1;
    EXPECT_THROW(generate(spec), ValidationError);
}

TEST(Tightness, Anchors) {
    Matrix same(2 * 3, 4);
    for (std::size_t r = 0; r < 6; ++r) same(r, r % 3) = 1.0 + static_cast<double>(r);
    EXPECT_NEAR(intra_class_tightness(same, 2, 3), 1.0, 1e-15);

    Matrix ortho(2 * 2, 4);
    ortho(0, 0) = 1; ortho(2, 1) = 1; // class 0
    ortho(1, 2) = 1; ortho(3, 3) = 1; // class 1
    EXPECT_EQ(intra_class_tightness(ortho, 2, 2), 0.0);

    EXPECT_THROW(intra_class_tightness(Matrix(2, 2, 1.0), 1, 2), ValidationError);
}

TEST(Synth, ReconstructionOnlyCaeAgreesWithMeanPoolWithoutShift) {
    SynthSpec spec;
    spec.domain_shift = 0;
    spec.noise = 0;
    const auto data = generate(spec);
    CaeConfig cfg;
    cfg.lambda1 = 0;
    cfg.lambda2 = 0;
    cfg.epochs = 300;
    const auto model = train(data.prompts, cfg).model;
    EXPECT_EQ(predict_all(cae_unify(data.prompts, model), data.images.data),
              predict_all(mean_pool(data.prompts), data.images.data));
}

TEST(Synth, IntraClassTrainingTightensOutputs) {
    const auto data = generate(SynthSpec{});
    CaeConfig cfg;
    cfg.lambda1 = 1;
    cfg.lambda2 = 0;
    cfg.epochs = 300;
    const auto model = train(data.prompts, cfg).model;
    const Matrix out = forward(model, data.prompts);
    EXPECT_GT(intra_class_tightness(out, 8, 5), intra_class_tightness(data.prompts));
}
