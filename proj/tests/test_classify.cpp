#include "duprg/aggregate.hpp"
#include "duprg/classify.hpp"
#include "duprg/errors.hpp"
#include "duprg/synth.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <json.hpp>

#include <algorithm>
#include <random>

using namespace duprg;

namespace {

UnifiedReps basis_reps() {
    UnifiedReps r;
    r.dims = 2;
    r.class_names = {"a", "b"};
    r.data = Matrix(2, 2);
    r.data(0, 0) = 1;
    r.data(1, 1) = 1;
    return r;
}

UnifiedReps random_reps(std::mt19937_64& rng, std::size_t C, std::size_t d) {
    UnifiedReps r;
    r.dims = d;
    for (std::size_t i = 0; i < C; ++i) r.class_names.push_back("c" + std::to_string(i));
    r.data = oracle::random_matrix(rng, C, d);
    return r;
}

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t d) {
    const Matrix m = oracle::random_matrix(rng, 1, d);
    return m.data;
}

} // namespace

TEST(Predict, Basics) {
    const auto reps = basis_reps();
    EXPECT_EQ(predict(reps, std::vector<double>{0.9, 0.1}), 0u);
    EXPECT_EQ(predict(reps, std::vector<double>{0.0, 5.0}), 1u);
    EXPECT_EQ(predict(reps, std::vector<double>{1.0, 1.0}), 0u); // tie -> lowest index
    EXPECT_THROW(predict(reps, std::vector<double>{0.0, 0.0}), ValidationError);
    EXPECT_THROW(predict(reps, std::vector<double>{1.0, 0.0, 0.0}), DimensionError);
}

TEST(Predict, ExactRepIsChosen) {
    std::mt19937_64 rng(1);
    const auto reps = random_reps(rng, 6, 9);
    for (std::size_t k = 0; k < 6; ++k) {
        std::vector<double> img(reps.data.row(k).begin(), reps.data.row(k).end());
        EXPECT_EQ(predict(reps, img), k);
    }
}

TEST(Predict, MatchesBruteForce) {
    std::mt19937_64 rng(2);
    const auto reps = random_reps(rng, 5, 16);
    for (int n = 0; n < 100; ++n) {
        const auto img = random_vector(rng, 16);
        EXPECT_EQ(predict(reps, img), oracle::ref_predict(reps.data, img));
    }
}

TEST(Predict, BatchMatchesSingle) {
    std::mt19937_64 rng(3);
    const auto reps = random_reps(rng, 7, 12);
    const Matrix imgs = oracle::random_matrix(rng, 300, 12);
    const auto batch = predict_all(reps, imgs);
    for (std::size_t n = 0; n < imgs.rows; ++n) {
        EXPECT_EQ(batch[n], predict(reps, std::vector<double>(imgs.row(n).begin(), imgs.row(n).end())));
    }
}

TEST(ScaleCheck, Anchors) {
    const auto reps = basis_reps();
    const std::vector<double> img = {0.3, 0.7};
    EXPECT_TRUE(scale_check(reps, img, 2.0));
    EXPECT_TRUE(scale_check(reps, img, 1e-6));
    EXPECT_THROW(scale_check(reps, img, 0.0), ValidationError);
}

TEST(ScaleCheck, RandomTriples) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> logs(-6.0, 6.0);
    for (int n = 0; n < 100; ++n) {
        const auto reps = random_reps(rng, 2 + rng() % 8, 3 + rng() % 20);
        const auto img = random_vector(rng, reps.dims);
        EXPECT_TRUE(scale_check(reps, img, std::pow(10.0, logs(rng))));
    }
}

TEST(ScaleCheck, RescalingARepRowKeepsArgmax) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> logs(-6.0, 6.0);
    for (int n = 0; n < 200; ++n) {
        const auto reps = random_reps(rng, 2 + rng() % 8, 3 + rng() % 20);
        const auto img = random_vector(rng, reps.dims);
        auto scaled = reps;
        const std::size_t row = rng() % reps.class_names.size();
        const double s = std::pow(10.0, logs(rng));
        for (double& v : scaled.data.row(row)) v *= s;
        EXPECT_EQ(predict(reps, img), predict(scaled, img));
    }
}

TEST(Evaluate, PerfectAndAdversarial) {
    const auto reps = basis_reps();
    ImageSet images;
    images.dims = 2;
    images.class_names = reps.class_names;
    images.data = Matrix(4, 2);
    images.data(0, 0) = 1; images.data(1, 1) = 1; images.data(2, 0) = 1; images.data(3, 1) = 1;
    images.labels = {0, 1, 0, 1};
    images.domain_tag = "sketch";
    auto r = evaluate(reps, images);
    EXPECT_EQ(r.accuracy, 1.0);
    EXPECT_EQ(r.correct, 4u);
    EXPECT_EQ(r.domain_tag, "sketch");

    images.labels = {1, 0, 1, 0};
    r = evaluate(reps, images);
    EXPECT_EQ(r.accuracy, 0.0);
    EXPECT_EQ(r.confusion[0][0] + r.confusion[1][1], 0u);
    EXPECT_EQ(r.confusion[1][0], 2u);
}

TEST(Evaluate, ClassMismatchIsExplicit) {
    const auto reps = basis_reps();
    ImageSet images;
    images.dims = 2;
    images.class_names = {"b", "a"};
    images.data = Matrix(1, 2, 1.0);
    images.labels = {0};
    EXPECT_THROW(evaluate(reps, images), ValidationError);
}

TEST(Evaluate, InvariantsAndOrderIndependence) {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t C = 2 + rng() % 6, d = 4 + rng() % 12, N = 50 + rng() % 200;
        const auto reps = random_reps(rng, C, d);
        ImageSet images;
        images.dims = d;
        images.class_names = reps.class_names;
        images.data = oracle::random_matrix(rng, N, d);
        for (std::size_t n = 0; n < N; ++n) images.labels.push_back(static_cast<std::uint32_t>(rng() % C));
        const auto r = evaluate(reps, images);

        std::uint64_t trace = 0, total = 0;
        double recomposed = 0.0;
        for (std::size_t i = 0; i < C; ++i) {
            trace += r.confusion[i][i];
            std::uint64_t count = 0;
            for (auto v : r.confusion[i]) count += v;
            total += count;
            recomposed += r.per_class_accuracy[i] * static_cast<double>(count);
        }
        EXPECT_EQ(trace, r.correct);
        EXPECT_EQ(total, r.total);
        EXPECT_EQ(r.accuracy, static_cast<double>(r.correct) / static_cast<double>(r.total));
        EXPECT_NEAR(recomposed / static_cast<double>(N), r.accuracy, 1e-15);
        EXPECT_EQ(std::lround(recomposed), static_cast<long>(r.correct));

        std::vector<std::size_t> perm(N);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        ImageSet shuffled = images;
        for (std::size_t n = 0; n < N; ++n) {
            std::copy(images.data.row(perm[n]).begin(), images.data.row(perm[n]).end(), shuffled.data.row(n).begin());
            shuffled.labels[n] = images.labels[perm[n]];
        }
        const auto r2 = evaluate(reps, shuffled);
        EXPECT_EQ(r2.confusion, r.confusion);
        EXPECT_EQ(r2.accuracy, r.accuracy);
    }
}

TEST(Evaluate, SyntheticMeanPoolMatchesOracleReference) {
    const SynthData data = generate(SynthSpec{});
    const double reference = oracle::ref_accuracy(data.oracle.data, data.images);
    const auto r = evaluate(mean_pool(data.prompts), data.images);
    EXPECT_NEAR(r.accuracy, reference, 0.02);
}

TEST(Evaluate, JsonShape) {
    const auto reps = basis_reps();
    ImageSet images;
    images.dims = 2;
    images.class_names = reps.class_names;
    images.data = Matrix(1, 2, 1.0);
    images.labels = {0};
    const auto j = nlohmann::json::parse(evaluate(reps, images).to_json());
    EXPECT_EQ(j.at("total"), 1);
    EXPECT_EQ(j.at("correct"), 1);
    EXPECT_EQ(j.at("confusion").size(), 2u);
    EXPECT_TRUE(j.at("domain_tag").is_null());
}

TEST(AccuracyTable, MeanColumnLast) {
    const std::string table = format_accuracy_table({"photo", "sketch"}, {1.0, 0.5});
    EXPECT_NE(table.find("photo"), std::string::npos);
    EXPECT_NE(table.find("100.0"), std::string::npos);
    EXPECT_NE(table.find("75.0"), std::string::npos);
    EXPECT_LT(table.find("sketch"), table.find("Avg"));
}
