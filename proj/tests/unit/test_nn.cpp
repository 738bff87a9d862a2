#include "mcnn/nn.hpp"

#include "gradcheck.hpp"
#include "nn_oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace mcnn;

using oracle::conv_oracle;
using oracle::random4;
using oracle::randomize;

TEST(Relu, ForwardAndMask) {
    std::vector<double> x{-1, 0, 2};
    relu_forward(x);
    EXPECT_EQ(x, (std::vector<double>{0, 0, 2}));
    std::vector<double> g{1, 1, 1};
    relu_backward(x, g);
    EXPECT_EQ(g, (std::vector<double>{0, 0, 1}));
}

TEST(Softmax, CrossEntropyCases) {
    const std::vector<double> uniform(5, 0.3);
    EXPECT_NEAR(softmax_cross_entropy(uniform, 2).loss, std::log(5.0), 1e-14);
    const std::vector<double> big{1000, 0};
    const auto lg = softmax_cross_entropy(big, 0);
    EXPECT_TRUE(std::isfinite(lg.loss));
    EXPECT_NEAR(lg.loss, 0.0, 1e-12);
    std::mt19937_64 g(3);
    std::normal_distribution<double> n(0.0, 5.0);
    for (int rep = 0; rep < 100; ++rep) {
        std::vector<double> l(7);
        for (auto& v : l) v = n(g);
        const auto r = softmax_cross_entropy(l, static_cast<std::size_t>(rep % 7));
        double s = 0.0;
        for (double v : r.grad) s += v;
        EXPECT_NEAR(s, 0.0, 1e-12);
    }
    EXPECT_THROW(softmax_cross_entropy(uniform, 5), ArgumentError);
}

TEST(Softmax, GradientMatchesFiniteDifference) {
    std::mt19937_64 g(4);
    std::vector<double> l{0.3, -1.2, 2.0, 0.7};
    const auto r = softmax_cross_entropy(l, 1);
    for (std::size_t i = 0; i < l.size(); ++i) {
        const double num = gradcheck::central([&] { return softmax_cross_entropy(l, 1).loss; }, l[i]);
        EXPECT_LE(gradcheck::rel_error(r.grad[i], num), 1e-4);
    }
}

TEST(GaussianInit, Statistics) {
    EXPECT_EQ(gaussian_init(100, 0.05, 7), gaussian_init(100, 0.05, 7));
    EXPECT_NE(gaussian_init(1, 0.05, 7)[0], gaussian_init(1, 0.05, 8)[0]);
    const auto v = gaussian_init(1000000, 0.05, 11);
    double m = 0.0, ss = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    for (double x : v) ss += (x - m) * (x - m);
    const double sd = std::sqrt(ss / static_cast<double>(v.size()));
    EXPECT_NEAR(sd, 0.05, 0.0005);
    EXPECT_LE(std::abs(m), 5 * 0.05 / 1000.0);
    EXPECT_THROW(gaussian_init(3, 0.0, 1), ArgumentError);
}

TEST(Conv3D, OneByOneKernelIsIdentity) {
    std::mt19937_64 g(1);
    Conv3D c({{1, 1, 1}, {1, 1, 1}, 1, Padding::valid}, 1, Activation::identity);
    c.params().values = {1.0, 0.0};
    const Tensor4 x = random4({3, 4, 5, 1}, g);
    EXPECT_EQ(c.forward(x), x);
}

TEST(Conv3D, WindowSum) {
    Conv3D c({{2, 2, 2}, {1, 1, 1}, 1, Padding::valid}, 1, Activation::identity);
    std::fill(c.params().values.begin(), c.params().values.end() - 1, 1.0);
    Tensor4 x({2, 2, 2, 1});
    for (auto& v : x.values()) v = 1.0;
    const Tensor4 y = c.forward(x);
    ASSERT_EQ(y.dims(), (Shape4{1, 1, 1, 1}));
    EXPECT_EQ(y.values()[0], 8.0);
}

TEST(Conv3D, StridedSpectralKernelShape) {
    std::mt19937_64 g(2);
    Conv3D c({{5, 5, 10}, {1, 1, 5}, 1, Padding::valid}, 1, Activation::identity);
    randomize(c.params(), g);
    const Tensor4 x = random4({7, 7, 40, 1}, g);
    const Tensor4 y = c.forward(x);
    ASSERT_EQ(y.dims(), (Shape4{3, 3, 7, 1}));
    EXPECT_EQ(c.output_shape(x.dims()), y.dims());
    const Tensor4 o = conv_oracle(c, x);
    for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(y.values()[i], o.values()[i], 1e-10);
}

TEST(Conv3D, MatchesNestedLoopOracle) {
    std::mt19937_64 g(3);
    std::uniform_int_distribution<std::size_t> small(1, 3), dim(3, 7), ch(1, 3);
    for (int rep = 0; rep < 100; ++rep) {
        const Extent3 k{small(g), small(g), small(g)};
        const Extent3 s{small(g), small(g), small(g)};
        const Padding pad = rep % 2 ? Padding::same : Padding::valid;
        const Shape4 in{dim(g) + k[0], dim(g) + k[1], dim(g) + k[2], ch(g)};
        Conv3D c({k, s, ch(g), pad}, in[3], rep % 3 ? Activation::relu : Activation::identity);
        randomize(c.params(), g);
        const Tensor4 x = random4(in, g);
        const Tensor4 y = c.forward(x);
        const Tensor4 o = conv_oracle(c, x);
        ASSERT_EQ(y.dims(), o.dims());
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            num += (y.values()[i] - o.values()[i]) * (y.values()[i] - o.values()[i]);
            den += o.values()[i] * o.values()[i];
        }
        EXPECT_LE(std::sqrt(num / std::max(den, 1e-300)), 1e-10);
    }
}

TEST(Conv3D, ShapeErrors) {
    Conv3D c({{3, 3, 3}, {1, 1, 1}, 2, Padding::valid}, 2);
    EXPECT_THROW(c.forward(Tensor4({4, 4, 4, 1})), ArgumentError);
    EXPECT_THROW(c.forward(Tensor4({2, 4, 4, 2})), ArgumentError);
    EXPECT_THROW(Conv3D({{3, 3, 3}, {0, 1, 1}, 2, Padding::valid}, 2), ArgumentError);
    const Tensor4 x({4, 4, 4, 2});
    const Tensor4 y = c.forward(x);
    EXPECT_THROW(c.backward(x, y, Tensor4({1, 1, 1, 2})), ArgumentError);
}

TEST(Conv3D, BackwardBasics) {
    std::mt19937_64 g(4);
    Conv3D c({{2, 3, 2}, {1, 2, 1}, 3, Padding::same}, 2, Activation::relu);
    randomize(c.params(), g);
    const Tensor4 x = random4({5, 6, 4, 2}, g);
    const Tensor4 y = c.forward(x);
    const auto zero = c.backward(x, y, Tensor4(y.dims()));
    for (double v : zero.params) EXPECT_EQ(v, 0.0);
    for (double v : zero.input.values()) EXPECT_EQ(v, 0.0);

    Conv3D lin({{2, 3, 2}, {1, 2, 1}, 3, Padding::same}, 2, Activation::identity);
    lin.params().values = c.params().values;
    const Tensor4 dy = random4(lin.output_shape(x.dims()), g);
    const auto gr = lin.backward(x, lin.forward(x), dy);
    for (std::size_t co = 0; co < 3; ++co) {
        double s = 0.0;
        for (std::size_t i = co; i < dy.size(); i += 3) s += dy.values()[i];
        EXPECT_NEAR(gr.params[lin.bias_index(co)], s, 1e-12);
    }
}

TEST(Conv3D, FiniteDifferenceGradients) {
    std::mt19937_64 g(5);
    for (int rep = 0; rep < 6; ++rep) {
        const Padding pad = rep % 2 ? Padding::same : Padding::valid;
        Conv3D c({{2, 3, 2}, {1, 1 + static_cast<std::size_t>(rep % 2), 2}, 2, pad}, 2,
                 rep < 3 ? Activation::identity : Activation::relu);
        randomize(c.params(), g);
        Tensor4 x = random4({4, 5, 6, 2}, g);
        const Tensor4 r = random4(c.output_shape(x.dims()), g);
        const auto loss = [&] {
            const Tensor4 y = c.forward(x);
            double l = 0.0;
            for (std::size_t i = 0; i < y.size(); ++i) l += r.values()[i] * y.values()[i];
            return l;
        };
        const auto gr = c.backward(x, c.forward(x), r);
        for (std::size_t i = 0; i < c.params().size(); ++i)
            EXPECT_LE(gradcheck::rel_error(gr.params[i], gradcheck::central(loss, c.params().values[i])), 1e-4)
                << "param " << i;
        for (std::size_t i = 0; i < x.size(); ++i)
            EXPECT_LE(gradcheck::rel_error(gr.input.values()[i], gradcheck::central(loss, x.values()[i])), 1e-4)
                << "input " << i;
    }
}

TEST(MaxPool3D, GlobalMaxAndTies) {
    std::mt19937_64 g(6);
    const Tensor4 x = random4({3, 4, 5, 2}, g);
    const MaxPool3D whole({{3, 4, 5}, {1, 1, 1}, Padding::valid});
    const auto r = whole.forward(x);
    ASSERT_EQ(r.output.dims(), (Shape4{1, 1, 1, 2}));
    for (std::size_t c = 0; c < 2; ++c) {
        double m = -1e300;
        for (std::size_t i = c; i < x.size(); i += 2) m = std::max(m, x.values()[i]);
        EXPECT_EQ(r.output.values()[c], m);
    }

    Tensor4 k({4, 4, 4, 1});
    for (auto& v : k.values()) v = 2.5;
    const MaxPool3D pool({{2, 2, 2}, {2, 2, 2}, Padding::valid});
    const auto t = pool.forward(k);
    for (std::size_t ox = 0; ox < 2; ++ox)
        for (std::size_t oy = 0; oy < 2; ++oy)
            for (std::size_t oz = 0; oz < 2; ++oz) {
                EXPECT_EQ(t.output(ox, oy, oz, 0), 2.5);
                EXPECT_EQ(t.argmax[t.output.offset(ox, oy, oz, 0)], k.offset(2 * ox, 2 * oy, 2 * oz, 0));
            }
}

TEST(MaxPool3D, MatchesScanOracle) {
    std::mt19937_64 g(7);
    const Tensor4 x = random4({3, 3, 7, 1}, g);
    const MaxPool3D pool({{3, 3, 5}, {1, 1, 2}, Padding::valid});
    const auto r = pool.forward(x);
    ASSERT_EQ(r.output.dims(), (Shape4{1, 1, 2, 1}));
    for (std::size_t oz = 0; oz < 2; ++oz) {
        double m = -1e300;
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 3; ++j)
                for (std::size_t k = 2 * oz; k < 2 * oz + 5; ++k) m = std::max(m, x(i, j, k, 0));
        EXPECT_EQ(r.output(0, 0, oz, 0), m);
    }
}

TEST(MaxPool3D, BackwardRoutesAndConserves) {
    std::mt19937_64 g(8);
    const Tensor4 x = random4({4, 4, 4, 2}, g);
    const MaxPool3D pool({{2, 2, 2}, {2, 2, 2}, Padding::valid});
    const auto r = pool.forward(x);
    const Tensor4 dy = random4(r.output.dims(), g);
    const Tensor4 dx = maxpool3d_backward(r, dy);
    std::size_t nonzero = 0;
    double sx = 0.0, sy = 0.0;
    for (double v : dx.values()) {
        nonzero += v != 0.0;
        sx += v;
    }
    for (double v : dy.values()) sy += v;
    EXPECT_EQ(nonzero, dy.size());
    EXPECT_NEAR(sx, sy, 1e-12);
    EXPECT_THROW(maxpool3d_backward(r, Tensor4({1, 1, 1, 1})), ArgumentError);
}

TEST(MaxPool3D, FiniteDifferenceGradients) {
    std::mt19937_64 g(9);
    for (int rep = 0; rep < 4; ++rep) {
        const MaxPool3D pool({{3, 3, 2}, {1, 2, 1}, rep % 2 ? Padding::same : Padding::valid});
        Tensor4 x = random4({5, 5, 4, 2}, g);
        const auto r0 = pool.forward(x);
        const Tensor4 w = random4(r0.output.dims(), g);
        const auto loss = [&] {
            const auto r = pool.forward(x);
            double l = 0.0;
            for (std::size_t i = 0; i < w.size(); ++i) l += w.values()[i] * r.output.values()[i];
            return l;
        };
        const Tensor4 dx = maxpool3d_backward(r0, w);
        for (std::size_t i = 0; i < x.size(); ++i)
            EXPECT_LE(gradcheck::rel_error(dx.values()[i], gradcheck::central(loss, x.values()[i])), 1e-4);
    }
}

TEST(MaxPool3D, OutputShapeLaw) {
    std::mt19937_64 g(10);
    std::uniform_int_distribution<std::size_t> d(1, 4);
    for (int rep = 0; rep < 50; ++rep) {
        const Extent3 k{d(g), d(g), d(g)}, s{d(g), d(g), d(g)};
        const Shape4 in{k[0] + d(g), k[1] + d(g), k[2] + d(g), 1};
        const MaxPool3D pool({k, s, Padding::valid});
        const Shape4 out = pool.output_shape(in);
        for (int a = 0; a < 3; ++a) EXPECT_EQ(out[a], (in[a] - k[a]) / s[a] + 1);
    }
    EXPECT_THROW(MaxPool3D({{5, 1, 1}, {1, 1, 1}, Padding::valid}).forward(Tensor4({4, 4, 4, 1})), ArgumentError);
}

TEST(Dense, IdentityPassThrough) {
    Dense d(4, 4, Activation::identity);
    for (std::size_t i = 0; i < 4; ++i) d.params().values[d.weight_index(i, i)] = 1.0;
    const std::vector<double> x{0.5, -2, 3, 0};
    EXPECT_EQ(d.forward(x), x);
    EXPECT_THROW(d.forward(std::vector<double>(3)), ArgumentError);
}

TEST(Dense, FiniteDifferenceGradients) {
    std::mt19937_64 g(11);
    for (auto act : {Activation::identity, Activation::relu}) {
        Dense d(5, 4, act);
        randomize(d.params(), g, 1.0);
        std::vector<double> x(5), r(4);
        std::uniform_real_distribution<double> u(-1, 1);
        for (auto& v : x) v = u(g);
        for (auto& v : r) v = u(g);
        const auto loss = [&] {
            const auto y = d.forward(x);
            double l = 0.0;
            for (std::size_t i = 0; i < 4; ++i) l += r[i] * y[i];
            return l;
        };
        const auto gr = d.backward(x, d.forward(x), r);
        for (std::size_t i = 0; i < d.params().size(); ++i)
            EXPECT_LE(gradcheck::rel_error(gr.params[i], gradcheck::central(loss, d.params().values[i])), 1e-4);
        for (std::size_t i = 0; i < 5; ++i)
            EXPECT_LE(gradcheck::rel_error(gr.input[i], gradcheck::central(loss, x[i])), 1e-4);
    }
}
