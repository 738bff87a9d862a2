#include "mcnn/optim.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace mcnn;

TEST(Adam, ZeroGradientLeavesParameters) {
    LayerParams p(4);
    p.values = {1, -2, 3, 0.5};
    const auto before = p.values;
    adam_step(p, std::vector<double>(4, 0.0), {});
    EXPECT_EQ(p.values, before);
    EXPECT_EQ(p.step, 1u);
}

TEST(Adam, FirstStepMovesByLearningRate) {
    // m1 = (1-b1) g, v1 = (1-b2) g^2, so m_hat / sqrt(v_hat) = sign(g) exactly
    // and the step is lr * |g| / (|g| + eps).
    AdamConfig cfg;
    cfg.learning_rate = 0.01;
    for (double g : {3.0, -0.25, 1e-3}) {
        LayerParams p(1);
        p.values = {2.0};
        adam_step(p, std::vector<double>{g}, cfg);
        const double expect = 2.0 - cfg.learning_rate * std::abs(g) / (std::abs(g) + cfg.epsilon) * (g > 0 ? 1 : -1);
        EXPECT_NEAR(p.values[0], expect, 1e-15);
        EXPECT_NEAR(std::abs(p.values[0] - 2.0), cfg.learning_rate, cfg.learning_rate * cfg.epsilon / std::abs(g) + 1e-15);
    }
}

TEST(Adam, SecondStepClosedForm) {
    AdamConfig cfg;
    LayerParams p(1);
    p.values = {0.0};
    adam_step(p, std::vector<double>{1.0}, cfg);
    adam_step(p, std::vector<double>{-2.0}, cfg);
    const double m = 0.9 * 0.1 * 1.0 + 0.1 * -2.0;
    const double v = 0.999 * 0.001 * 1.0 + 0.001 * 4.0;
    const double step2 = cfg.learning_rate * (m / (1 - 0.81)) / (std::sqrt(v / (1 - 0.999 * 0.999)) + cfg.epsilon);
    const double step1 = cfg.learning_rate * 1.0 / (1.0 + cfg.epsilon);
    EXPECT_NEAR(p.values[0], -step1 - step2, 1e-15);
}

TEST(Adam, IndependentTensorsOrderFree) {
    std::mt19937_64 g(1);
    std::normal_distribution<double> n;
    LayerParams a(5), b(3);
    for (auto& v : a.values) v = n(g);
    for (auto& v : b.values) v = n(g);
    std::vector<double> ga(5), gb(3);
    for (auto& v : ga) v = n(g);
    for (auto& v : gb) v = n(g);
    LayerParams a2 = a, b2 = b;
    adam_step(a, ga, {});
    adam_step(b, gb, {});
    adam_step(b2, gb, {});
    adam_step(a2, ga, {});
    EXPECT_EQ(a.values, a2.values);
    EXPECT_EQ(b.values, b2.values);
}

TEST(Adam, ElementwiseUnderPermutation) {
    std::mt19937_64 g(2);
    std::normal_distribution<double> n;
    LayerParams p(6);
    for (auto& v : p.values) v = n(g);
    const std::vector<std::size_t> perm{3, 0, 5, 1, 4, 2};
    LayerParams q(6);
    for (std::size_t i = 0; i < 6; ++i) q.values[i] = p.values[perm[i]];
    for (int step = 0; step < 10; ++step) {
        std::vector<double> gp(6), gq(6);
        for (auto& v : gp) v = n(g);
        for (std::size_t i = 0; i < 6; ++i) gq[i] = gp[perm[i]];
        adam_step(p, gp, {});
        adam_step(q, gq, {});
    }
    for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(q.values[i], p.values[perm[i]]);
}

TEST(Adam, QuadraticLossDrops) {
    std::mt19937_64 g(3);
    std::normal_distribution<double> n;
    LayerParams p(20);
    for (auto& v : p.values) v = n(g);
    const auto loss = [&] {
        double l = 0.0;
        for (double v : p.values) l += 0.5 * v * v;
        return l;
    };
    const double start = loss();
    AdamConfig cfg;
    cfg.learning_rate = 0.01;
    for (int step = 0; step < 500; ++step) adam_step(p, p.values, cfg);
    EXPECT_LE(loss(), start / 100.0);
}

TEST(Adam, Errors) {
    LayerParams p(3);
    EXPECT_THROW(adam_step(p, std::vector<double>(2), {}), ArgumentError);
    AdamConfig bad;
    bad.beta1 = 1.0;
    EXPECT_THROW(adam_step(p, std::vector<double>(3), bad), ArgumentError);
    bad = {};
    bad.learning_rate = 0.0;
    EXPECT_THROW(adam_step(p, std::vector<double>(3), bad), ArgumentError);
}
