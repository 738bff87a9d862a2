#include "mcnn/metrics.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

using namespace mcnn;

namespace {

ConfusionMatrix from_rows(const std::vector<std::vector<std::uint64_t>>& rows) {
    ConfusionMatrix cm(rows.size());
    for (std::size_t t = 0; t < rows.size(); ++t)
        for (std::size_t p = 0; p < rows.size(); ++p) cm.at(t, p) = rows[t][p];
    return cm;
}

// kappa = (N sum x_kk - sum x_k+ x_+k) / (N^2 - sum x_k+ x_+k), in integers.
double kappa_oracle(const ConfusionMatrix& cm) {
    const std::size_t c = cm.class_count();
    long double n = 0, diag = 0, marg = 0;
    for (std::size_t t = 0; t < c; ++t)
        for (std::size_t p = 0; p < c; ++p) n += static_cast<long double>(cm.at(t, p));
    for (std::size_t k = 0; k < c; ++k) {
        diag += static_cast<long double>(cm.at(k, k));
        long double r = 0, col = 0;
        for (std::size_t j = 0; j < c; ++j) {
            r += static_cast<long double>(cm.at(k, j));
            col += static_cast<long double>(cm.at(j, k));
        }
        marg += r * col;
    }
    return static_cast<double>((n * diag - marg) / (n * n - marg));
}

}  // namespace

TEST(Metrics, TwoClassWorkedExample) {
    const auto cm = from_rows({{40, 10}, {20, 30}});
    EXPECT_DOUBLE_EQ(overall_accuracy(cm), 0.7);
    EXPECT_DOUBLE_EQ(average_accuracy(cm), (0.8 + 0.6) / 2);
    // pe = (50*60 + 50*40) / 100^2 = 0.5; kappa = 0.2 / 0.5.
    EXPECT_DOUBLE_EQ(expected_agreement(cm), 0.5);
    EXPECT_NEAR(kappa(cm), 0.4, 1e-15);
    EXPECT_NEAR(kappa(cm), kappa_oracle(cm), 1e-12);
}

TEST(Metrics, ConfusionFromLabels) {
    const std::vector<std::size_t> truth{0, 0, 1, 2, 2, 2}, pred{0, 1, 1, 2, 0, 2};
    const auto cm = confusion(truth, pred, 3);
    EXPECT_EQ(cm.at(0, 0), 1u);
    EXPECT_EQ(cm.at(0, 1), 1u);
    EXPECT_EQ(cm.at(2, 0), 1u);
    EXPECT_EQ(cm.total(), 6u);
    const auto acc = per_class_accuracy(cm);
    EXPECT_DOUBLE_EQ(acc[0], 0.5);
    EXPECT_DOUBLE_EQ(acc[1], 1.0);
    EXPECT_DOUBLE_EQ(acc[2], 2.0 / 3.0);
    EXPECT_THROW(confusion(truth, std::vector<std::size_t>{0}, 3), ArgumentError);
    EXPECT_THROW(confusion(truth, pred, 2), ArgumentError);
}

TEST(Metrics, PerfectAndSingleClass) {
    const auto perfect = from_rows({{5, 0, 0}, {0, 7, 0}, {0, 0, 2}});
    EXPECT_EQ(overall_accuracy(perfect), 1.0);
    EXPECT_EQ(kappa(perfect), 1.0);
    // Everything in one class: pe = 1.
    const auto one = from_rows({{9, 0}, {0, 0}});
    EXPECT_EQ(expected_agreement(one), 1.0);
    EXPECT_EQ(kappa(one), 1.0);
    EXPECT_EQ(average_accuracy(one), 1.0);
    EXPECT_THROW(overall_accuracy(ConfusionMatrix(3)), ArgumentError);
}

TEST(Metrics, RandomMatricesMatchOracleAndPermute) {
    std::mt19937_64 g(21);
    std::uniform_int_distribution<int> cls(2, 12), cnt(0, 40);
    for (int rep = 0; rep < 100; ++rep) {
        const std::size_t c = static_cast<std::size_t>(cls(g));
        ConfusionMatrix cm(c);
        for (std::size_t t = 0; t < c; ++t)
            for (std::size_t p = 0; p < c; ++p) cm.at(t, p) = static_cast<std::uint64_t>(cnt(g));
        EXPECT_NEAR(kappa(cm), kappa_oracle(cm), 1e-12);
        EXPECT_GE(overall_accuracy(cm), 0.0);
        EXPECT_LE(overall_accuracy(cm), 1.0);

        std::vector<std::size_t> perm(c);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), g);
        ConfusionMatrix q(c);
        for (std::size_t t = 0; t < c; ++t)
            for (std::size_t p = 0; p < c; ++p) q.at(perm[t], perm[p]) = cm.at(t, p);
        EXPECT_NEAR(overall_accuracy(q), overall_accuracy(cm), 1e-15);
        EXPECT_NEAR(average_accuracy(q), average_accuracy(cm), 1e-12);
        EXPECT_NEAR(kappa(q), kappa(cm), 1e-12);
    }
}

TEST(Metrics, AverageSkipsEmptyClasses) {
    const auto cm = from_rows({{3, 1, 0}, {0, 0, 0}, {0, 2, 2}});
    EXPECT_DOUBLE_EQ(average_accuracy(cm), (0.75 + 0.5) / 2);
    EXPECT_LT(per_class_accuracy(cm)[1], 0.0);
}
