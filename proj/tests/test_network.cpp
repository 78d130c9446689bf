#include "certkit/error.hpp"
#include "certkit/network.hpp"
#include "support.hpp"

#include <doctest.h>

#include <sstream>

using namespace certkit;
using namespace testing;

namespace {

Network parse(const std::string& s) {
    std::istringstream in(s);
    return parse_network(in);
}

ErrorCode parse_error(const std::string& s) {
    try {
        parse(s);
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected a parse failure");
    return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_SUITE("network") {

TEST_CASE("one-layer file computes 2x") {
    const auto net = parse("relu-net v1\ndims 1 1\nlayer 1 identity\n2.0\n0.0\n");
    CHECK(net.input_dim() == 1);
    CHECK(net.output_dim() == 1);
    const double x = 1.75;
    CHECK(evaluate(net, std::span<const double>(&x, 1))[0] == 3.5);
}

TEST_CASE("bundled 50-200-10 classifier") {
    const auto net = load_network(std::string(CERTKIT_ASSET_DIR) + "/classifier.net");
    CHECK(net.input_dim() == 50);
    CHECK(net.output_dim() == 10);
    CHECK(net.hidden_units() == 200);
    CHECK(param_count(net) == 12000);
}

TEST_CASE("parse errors carry the right codes") {
    // second layer rows have 3 entries after a width-2 layer
    CHECK(parse_error("relu-net v1\ndims 1 2 1\nlayer 1 relu\n1\n1\n0 0\nlayer 2 identity\n1 1 1\n0\n") ==
          ErrorCode::DimensionMismatch);
    CHECK(parse_error("relu-net v2\ndims 1 1\nlayer 1 identity\n1\n0\n") == ErrorCode::Parse);
    CHECK(parse_error("relu-net v1\ndims 1 1\nlayer 1 identity\n1.0x\n0\n") == ErrorCode::Parse);
    CHECK(parse_error("relu-net v1\ndims 1 1\nlayer 1 identity\nnan\n0\n") == ErrorCode::NonFinite);
    CHECK(parse_error("relu-net v1\ndims 1 1\nlayer 1 identity\n1\ninf\n") == ErrorCode::NonFinite);
    CHECK(parse_error("relu-net v1\ndims 1 1\nlayer 1 relu\n1\n0\n") == ErrorCode::InvalidArgument);
    CHECK(parse_error("relu-net v1\ndims 1 1\nlayer 1 identity\n1\n") == ErrorCode::Parse);
    CHECK_THROWS_AS(load_network("/nonexistent/file.net"), Error);
}

TEST_CASE("constructor enforces chaining") {
    std::vector<AffineLayer> layers;
    layers.push_back({Matrix(2, 1, 1.0), {0, 0}, Activation::ReLU});
    layers.push_back({Matrix(1, 3, 1.0), {0}, Activation::Identity});
    CHECK_THROWS_AS(Network(std::move(layers)), Error);
    CHECK_THROWS_AS(Network(std::vector<AffineLayer>{}), Error);
    std::vector<AffineLayer> bad_bias;
    bad_bias.push_back({Matrix(1, 1, 1.0), {0, 0}, Activation::Identity});
    CHECK_THROWS_AS(Network(std::move(bad_bias)), Error);
}

TEST_CASE("write and parse round trip") {
    std::mt19937_64 rng(3);
    const auto net = random_net(rng, {3, 5, 4, 2});
    std::stringstream buf;
    write_network(buf, net);
    const auto back = parse_network(buf);
    for (int t = 0; t < 20; ++t) {
        const auto x = sample_point(rng, BoxSet({-1, -1, -1}, {1, 1, 1}));
        CHECK(evaluate(back, x) == evaluate(net, x));
    }
}

TEST_CASE("relu evaluation and activation pattern") {
    const auto net = relu_1d();
    const double neg = -1.0, pos = 2.0, one = 1.0;
    CHECK(evaluate(net, std::span<const double>(&neg, 1))[0] == 0.0);
    CHECK(evaluate(net, std::span<const double>(&pos, 1))[0] == 2.0);
    CHECK(activation_pattern(net, std::span<const double>(&one, 1)) == std::vector<bool>{true});
    CHECK(activation_pattern(net, std::span<const double>(&neg, 1)) == std::vector<bool>{false});
    const std::vector<double> wrong{1.0, 2.0};
    CHECK_THROWS_AS(evaluate(net, wrong), Error);
    CHECK_THROWS_AS(activation_pattern(net, wrong), Error);
}

TEST_CASE("sawtooth matches the tent iterate on a 10k grid") {
    for (int k : {1, 3, 10}) {
        const auto net = make_sawtooth(k);
        double worst = 0.0;
        for (int i = 0; i < 10000; ++i) {
            const double x = i / 9999.0;
            worst = std::max(worst, std::abs(evaluate(net, std::span<const double>(&x, 1))[0] - tent_iterate(x, k)));
        }
        CHECK(worst <= 1e-9);
    }
}

TEST_CASE("activation pattern is constant on each enumerated piece") {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 20; ++t) {
        const auto net = random_net(rng, {1, 6, 5, 1});
        const BoxSet iv({-2.0}, {2.0});
        const auto dec = enumerate_pieces_1d(net, iv);
        for (const auto& p : dec.pieces) {
            if (p.hi - p.lo < 1e-9) continue;
            // interior points of a piece may still straddle merged equal forms,
            // so compare the function (affine) rather than raw patterns
            const double a = p.lo + 0.25 * (p.hi - p.lo), b = p.lo + 0.75 * (p.hi - p.lo);
            const double m = 0.5 * (a + b);
            const double fa = forward(net, {a})[0], fb = forward(net, {b})[0], fm = forward(net, {m})[0];
            CHECK(std::abs(fm - 0.5 * (fa + fb)) <= 1e-9);
        }
        // patterns: two points with equal pattern lie on one affine piece
        for (int s = 0; s < 50; ++s) {
            std::uniform_real_distribution<double> u(-2.0, 2.0);
            const double x = u(rng), y = u(rng);
            const std::vector<double> vx{x}, vy{y}, vm{0.5 * (x + y)};
            if (activation_pattern(net, vx) != activation_pattern(net, vy)) continue;
            CHECK(std::abs(forward(net, vm)[0] - 0.5 * (forward(net, vx)[0] + forward(net, vy)[0])) <= 1e-9);
        }
    }
}

TEST_CASE("param count") {
    CHECK(param_count(affine_net({{{1.0}}}, {{0.0}})) == 1);
    std::mt19937_64 rng(5);
    const auto net = random_net(rng, {4, 8, 8, 2});
    CHECK(param_count(net) == 4 * 8 + 8 * 8 + 8 * 2);
    for (int t = 0; t < 20; ++t) {
        const auto dims = random_dims(rng, 1 + rng() % 6, 1 + rng() % 4, 4, 16);
        std::uint64_t expect = 0;
        for (std::size_t l = 1; l < dims.size(); ++l) expect += dims[l - 1] * dims[l];
        CHECK(param_count(random_net(rng, dims)) == expect);
    }
}

TEST_CASE("global Lipschitz bound") {
    CHECK(global_lipschitz_upper(affine_net({{{3.0}}}, {{1.0}}), NormKind::L2) == 3.0);
    for (auto n : {NormKind::L1, NormKind::L2, NormKind::LInf})
        CHECK(global_lipschitz_upper(affine_net({{{1.0}}}, {{0.0}}), n) == 1.0);

    const Matrix w(2, 2, std::vector<double>{1, -2, 3, 4});
    CHECK(operator_norm_upper(w, NormKind::L1) == doctest::Approx(std::sqrt(20.0)));
    CHECK(operator_norm_upper(w, NormKind::L2) == doctest::Approx(std::sqrt(30.0)));
    CHECK(operator_norm_upper(w, NormKind::LInf) == doctest::Approx(std::sqrt(9.0 + 49.0)));
}

TEST_CASE("global Lipschitz bound dominates sampled slopes") {
    std::mt19937_64 rng(17);
    auto norm = [](NormKind k, const std::vector<double>& d) {
        double acc = 0.0;
        for (double v : d) {
            if (k == NormKind::L1) acc += std::abs(v);
            else if (k == NormKind::L2) acc += v * v;
            else acc = std::max(acc, std::abs(v));
        }
        return k == NormKind::L2 ? std::sqrt(acc) : acc;
    };
    for (int t = 0; t < 10; ++t) {
        const auto net = random_net(rng, {4, 10, 10, 3});
        const BoxSet box({-1, -1, -1, -1}, {1, 1, 1, 1});
        for (auto k : {NormKind::L1, NormKind::L2, NormKind::LInf}) {
            const double lf = global_lipschitz_upper(net, k);
            for (int s = 0; s < 10000; ++s) {
                const auto x = sample_point(rng, box), y = sample_point(rng, box);
                const auto fx = forward(net, x), fy = forward(net, y);
                std::vector<double> dx(x.size()), dy(fx.size());
                for (std::size_t i = 0; i < x.size(); ++i) dx[i] = x[i] - y[i];
                for (std::size_t i = 0; i < fx.size(); ++i) dy[i] = fx[i] - fy[i];
                REQUIRE(norm(NormKind::L2, dy) <= lf * norm(k, dx) + 1e-9);
            }
        }
    }
}

}  // TEST_SUITE
